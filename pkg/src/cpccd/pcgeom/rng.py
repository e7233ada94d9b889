"""Keyed deterministic random streams.

A stream is identified by ``(master_seed, object_id, kind_tag)``. The key is
hashed with SHA-256 and fed to numpy's ``SeedSequence``/``PCG64``, both of
which are specified bit-for-bit across platforms, so a given key produces the
same draws everywhere and independently of which thread consumes it.
"""
from __future__ import annotations

import hashlib

import numpy as np


class RngStream:
    def __init__(self, master_seed: int, object_id: str = "", kind_tag: str = ""):
        self.master_seed = int(master_seed)
        self.object_id = str(object_id)
        self.kind_tag = str(kind_tag)
        key = f"{self.master_seed}\x1f{self.object_id}\x1f{self.kind_tag}".encode()
        digest = hashlib.sha256(key).digest()
        self.seed = int.from_bytes(digest[:8], "little")
        entropy = int.from_bytes(digest, "little")
        self.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    @property
    def key(self) -> tuple[int, str, str]:
        return (self.master_seed, self.object_id, self.kind_tag)

    def child(self, tag: str) -> RngStream:
        """Independent stream keyed by this key extended with ``tag``.

        Children do not depend on how many draws the parent has made.
        """
        sub = f"{self.kind_tag}/{tag}" if self.kind_tag else str(tag)
        return RngStream(self.master_seed, self.object_id, sub)

    def __repr__(self):
        return f"RngStream({self.master_seed}, {self.object_id!r}, {self.kind_tag!r})"

    # thin forwards to the underlying generator
    def random(self, size=None):
        return self.generator.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def choice(self, a, size=None, replace=True, p=None):
        return self.generator.choice(a, size=size, replace=replace, p=p)

    def permutation(self, x):
        return self.generator.permutation(x)

    def unit_vectors(self, n: int) -> np.ndarray:
        v = self.generator.normal(size=(n, 3))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        zero = norms[:, 0] == 0
        v[zero] = (1.0, 0.0, 0.0)
        norms[zero] = 1.0
        return v / norms

    def rotation_matrix(self) -> np.ndarray:
        """Uniformly random rotation (Haar measure) via a unit quaternion."""
        q = self.generator.normal(size=4)
        q /= np.linalg.norm(q)
        w, x, y, z = q
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ])
