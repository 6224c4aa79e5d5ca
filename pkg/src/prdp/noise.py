"""Randomness primitives: seeded noise source, Laplace sampling, tail bounds.

All randomness in the package flows through :class:`NoiseSource`, which wraps
an explicitly chosen counter-based generator (Philox 4x64) rather than any
platform default. Identical seeds therefore yield bit-identical sample
streams across platforms. A zero-noise test double is provided for
deterministic end-to-end tests; it is NOT private and the CLI refuses it
unless ``--unsafe-zero-noise`` is passed.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # SplitMix64 finalizer (Steele et al.); full-period 64-bit mixing.
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Fixed sub-seed mixing rule: the (index+1)-th SplitMix64 output of ``seed``.

    Used to give every trial (and every party within a trial) its own
    independent stream: ``subseed = mix64(seed + (index + 1) * golden)``.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    return _mix64((seed + (index + 1) * _GOLDEN) & _MASK64)


class NoiseSource:
    """Single-owner randomness stream for one mechanism run or trial.

    Two modes:
      * seeded: Philox-backed stream, bit-exact replay per seed;
      * zero: every Laplace draw is 0 and selection picks the arg-max
        candidate (first on ties). Test double only, not private.

    A NoiseSource must not be shared between concurrent tasks; derive
    per-task sources with :meth:`child`.
    """

    def __init__(self, seed: int | None, zero: bool = False):
        self.seed = None if zero else int(seed) & _MASK64
        self.is_zero = zero
        self._rng = None if zero else np.random.Generator(np.random.Philox(key=self.seed))

    @classmethod
    def seeded(cls, seed: int) -> "NoiseSource":
        return cls(seed)

    @classmethod
    def zero(cls) -> "NoiseSource":
        """Zero-noise test double. Not private; see module docstring."""
        return cls(None, zero=True)

    def child(self, index: int) -> "NoiseSource":
        """Sub-seeded source for trial/party ``index`` (zero stays zero)."""
        if self.is_zero:
            return NoiseSource.zero()
        return NoiseSource.seeded(derive_seed(self.seed, index))

    def laplace(self, scale, size=None):
        """Draw Laplace(0, scale) via inverse CDF from one uniform per sample.

        With u uniform in (-1/2, 1/2), ``x = -b * sgn(u) * ln(1 - 2|u|)``;
        the seeded path delegates to the generator's native Laplace draw,
        which applies exactly this transform to its [0, 1) uniform (branch
        at 1/2, i.e. the same map with u shifted by 1/2). The uniform stream
        is bit-exact across platforms per seed; the log transform inherits
        the platform libm, so replay is bit-exact on a fixed installation.

        Args:
            scale: Laplace scale b > 0; a scalar, or an array giving one
                draw per element (broadcast against ``size`` when given).
            size: optional output shape; scalar scale + size=None gives a float.

        Returns:
            float or ndarray of samples (exact zeros in zero-noise mode).
        """
        scale_arr = np.asarray(scale, dtype=float)
        if not np.all(scale_arr > 0) or not np.all(np.isfinite(scale_arr)):
            raise ValueError("laplace scale must be positive and finite")
        if size is None and scale_arr.ndim > 0:
            size = scale_arr.shape
        if self.is_zero:
            return 0.0 if size is None else np.zeros(size)
        if size is None:
            return float(self._rng.laplace(0.0, float(scale_arr)))
        if scale_arr.ndim == 0:
            return self._rng.laplace(0.0, float(scale_arr), size)
        out = self._rng.laplace(0.0, 1.0, size)
        out *= scale_arr
        return out

    def pick_max(self, utilities, eps: float, sensitivity: float = 1.0) -> int:
        """Exponential-mechanism selection: index ~ exp(eps * u / (2 * sensitivity)).

        Zero-noise mode returns the arg-max index (first on ties), so the
        selection is deterministic in tests.
        """
        u = np.asarray(utilities, dtype=float)
        if u.size == 0:
            raise ValueError("empty candidate set")
        if self.is_zero:
            return int(np.argmax(u))
        logits = (eps / (2.0 * sensitivity)) * u
        logits -= logits.max()
        weights = np.exp(logits)
        cum = np.cumsum(weights)
        r = self._rng.random() * cum[-1]
        return min(int(np.searchsorted(cum, r, side="right")), u.size - 1)


def tail_radius(scale: float, beta: float) -> float:
    """Radius r with Pr(|Lap(scale)| >= r) <= beta, i.e. ``scale * ln(1/beta)``."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    return scale * math.log(1.0 / beta)
