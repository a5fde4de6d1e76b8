"""Deterministic Gaussian sampling keyed by (seed, stream-id).

The generator is Philox4x64-10 (numpy's counter-based implementation) keyed
directly by the ``(seed, stream_id)`` pair, so streams never collide and can
be created in any order. Normal variates are produced by an explicit
Box-Muller transform over the generator's uniforms instead of numpy's
``standard_normal``; the emitted sequence is then fixed by this module and
the Philox algorithm alone, not by numpy's choice of normal method.

Sequence definition, for the record: let ``v0, v1, v2, ...`` be the stream of
64-bit-precision uniforms in [0, 1) from ``Generator(Philox(key=(seed,
stream_id)))``. Consecutive pairs ``(v_{2k}, v_{2k+1})`` map to

    r = sqrt(-2 ln(1 - v_{2k}))
    z_{2k}   = r cos(2 pi v_{2k+1})
    z_{2k+1} = r sin(2 pi v_{2k+1})

and a request for n normals consumes exactly 2*ceil(n/2) uniforms.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolationError

_MASK64 = (1 << 64) - 1


class RngStream:
    """Single-owner stream of reproducible uniform/normal variates."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform(self, n: int) -> np.ndarray:
        """Next n uniforms in [0, 1)."""
        return self._gen.random(int(n))

    def normal(self, shape) -> np.ndarray:
        """Next standard-normal variates, Box-Muller over the uniform stream."""
        shape = (int(shape),) if np.isscalar(shape) else tuple(int(s) for s in shape)
        n = int(np.prod(shape)) if shape else 1
        pairs = (n + 1) // 2
        u = self._gen.random(2 * pairs)
        # 1 - u0 is in (0, 1], keeping the log finite
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        ang = 2.0 * np.pi * u[1::2]
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(ang)
        z[1::2] = r * np.sin(ang)
        return z[:n].reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n), by sorting one uniform key per index."""
        keys = self.uniform(int(n))
        return np.argsort(keys, kind="stable")

    def substream(self, stream_id: int) -> "RngStream":
        """A fresh stream with the same seed and a different stream-id."""
        return RngStream(self.seed, stream_id)


def gaussian_matrix(rng: RngStream, rows: int, cols: int) -> np.ndarray:
    """(rows x cols) matrix of i.i.d. standard normals from the stream."""
    if rows < 1 or cols < 1:
        raise ContractViolationError(f"gaussian_matrix needs rows, cols >= 1, got {rows}x{cols}")
    return rng.normal((int(rows), int(cols)))
