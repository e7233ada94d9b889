import numpy as np
import pytest

from cpccd.pcgeom import PointCloud, write_cloud


def scan_like(n=800, seed=0, radius=0.4):
    """Upper half of a noisy sphere sitting on y = -radius: a crude partial scan."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(2 * n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v = v[v[:, 2] > -0.2][:n]
    return PointCloud(radius * v + rng.normal(scale=0.002, size=v.shape))


@pytest.fixture
def partial():
    return scan_like()


@pytest.fixture
def small_partial():
    return scan_like(n=200, seed=3)


def make_corpus(root, counts=(3, 1, 1), n=150, ext=".xyz"):
    """train/val/test tree with partial and complete clouds per object."""
    k = 0
    for split, c in zip(("train", "val", "test"), counts):
        for sub in ("partial", "complete"):
            (root / split / sub).mkdir(parents=True, exist_ok=True)
        for _ in range(c):
            oid = f"obj{k:03d}"
            part = scan_like(n=n, seed=100 + k)
            comp = scan_like(n=2 * n, seed=200 + k)
            write_cloud(root / split / "partial" / f"{oid}{ext}", part)
            write_cloud(root / split / "complete" / f"{oid}{ext}", comp)
            k += 1
    return root
