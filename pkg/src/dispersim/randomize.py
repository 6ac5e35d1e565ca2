"""Gaussian coefficient draws and the unit-scale randomization map.

Each lattice point receives an independent standard complex Gaussian
g_k = (X + iY)/sqrt(2) with X, Y independent standard normals, so
E|g_k|^2 = 1 and each real component, having variance 1/2, satisfies the
moment-generating bound E exp(gamma X/sqrt(2)) = exp(gamma^2 / 4).

Generation is counter based: the Philox stream for ensemble member m is
keyed by the pair (seed, m), and coefficients are read off in the fixed
canonical (lexicographic) lattice order.  Ensembles are therefore
reproducible and order independent regardless of how samples are
distributed across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .grid import Field, GridSpec, Spectrum, forward_transform, inverse_transform
from .wiener import UnitLattice, projection_blocks, unit_lattice

_MASK64 = (1 << 64) - 1
_SQRT_HALF = 1.0 / np.sqrt(2.0)


def _key(seed: int, sample_index: int) -> np.ndarray:
    return np.array(
        [int(seed) & _MASK64, int(sample_index) & _MASK64], dtype=np.uint64
    )


def coefficient_block(seed: int, n_coeffs: int, sample_index: int = 0) -> np.ndarray:
    """The n_coeffs complex Gaussians of ensemble member ``sample_index``.

    Pure in (seed, sample_index, position): re-running with the same
    arguments reproduces the same values bit for bit.
    """
    gen = np.random.Generator(np.random.Philox(key=_key(seed, sample_index)))
    z = gen.standard_normal(2 * n_coeffs)
    return _SQRT_HALF * (z[0::2] + 1j * z[1::2])


def gaussian_matrix(
    seed: int, n_samples: int, n_coeffs: int, sample_offset: int = 0
) -> np.ndarray:
    """Stack of coefficient blocks for samples [offset, offset + n_samples).

    Identical to stacking :func:`coefficient_block` calls; the bit
    generator pair is created once per call and re-keyed per sample,
    which keeps the keying per sample but drops the object-construction
    overhead.  Local state only, so concurrent calls are safe.
    """
    out = np.empty((n_samples, n_coeffs), dtype=np.complex128)
    bg = np.random.Philox(key=_key(seed, sample_offset))
    gen = np.random.Generator(bg)
    template = bg.state
    for m in range(n_samples):
        state = dict(template)
        state["state"] = {
            "counter": np.zeros(4, dtype=np.uint64),
            "key": _key(seed, sample_offset + m),
        }
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        bg.state = state
        z = gen.standard_normal(2 * n_coeffs)
        out[m] = _SQRT_HALF * (z[0::2] + 1j * z[1::2])
    return out


@dataclass(frozen=True, eq=False)
class RandomDraw:
    """One realization of the coefficient family over a unit lattice."""

    seed: int
    lattice: UnitLattice
    coefficients: np.ndarray  # aligned with lattice.points
    sample_index: int = 0

    def __post_init__(self):
        if self.coefficients.shape != (len(self.lattice),):
            raise ConfigurationError(
                f"{self.coefficients.shape[0]} coefficients for a lattice of"
                f" {len(self.lattice)} points"
            )
        arr = np.ascontiguousarray(self.coefficients, dtype=np.complex128)
        arr.flags.writeable = False
        object.__setattr__(self, "coefficients", arr)

    def coefficient(self, k) -> complex:
        return complex(self.coefficients[self.lattice.index_of(k)])


def draw(seed: int, lattice: UnitLattice, sample_index: int = 0) -> RandomDraw:
    """Draw the coefficient family; same seed gives identical coefficients."""
    return RandomDraw(
        seed=seed,
        lattice=lattice,
        coefficients=coefficient_block(seed, len(lattice), sample_index),
        sample_index=sample_index,
    )


def constant_draw(lattice: UnitLattice, value: complex = 1.0) -> RandomDraw:
    """Test hook: every coefficient forced to ``value`` (value 1 turns the
    randomization into plain reconstruction)."""
    return RandomDraw(
        seed=0,
        lattice=lattice,
        coefficients=np.full(len(lattice), value, dtype=np.complex128),
    )


def randomized_weights(
    spec: GridSpec, lattice: UnitLattice, coefficients: np.ndarray
) -> np.ndarray:
    """Frequency-mesh weight sum_k g_k psi(xi - k) for one draw."""
    weights = np.zeros(spec.shape, dtype=np.complex128)
    for _, idx, windows, block in projection_blocks(spec):
        weights[windows] += coefficients[idx] * block
    return weights


def randomize_field(f: Field, d: RandomDraw) -> Field:
    """The randomized field sum_k g_k psi(D - k) f.

    Implemented as a single frequency-side multiplication by
    sum_k g_k psi(xi - k), which equals the sum of scaled unit-scale
    pieces by linearity of the inverse transform.
    """
    spec = f.spec
    if d.lattice.spec != spec:
        raise ConfigurationError("draw lattice does not match the field's grid")
    F = forward_transform(f)
    weights = randomized_weights(spec, d.lattice, d.coefficients)
    return inverse_transform(Spectrum(spec, weights * F.coeffs))


def khintchine_moment(
    c, p: float, samples: int, seed: int, chunk: int = 4096
) -> float:
    """Monte Carlo estimate of the L^p norm over draws of sum_k g_k c_k.

    p must be at least 2 and ``samples`` at least 1000; the estimate is
    ( mean_m |sum_k g_k^(m) c_k|^p )^(1/p), computed in fixed chunks so
    the reduction order never depends on scheduling.
    """
    if p < 2:
        raise ValueError(f"moment order must be >= 2, got {p}")
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    c = np.asarray(c, dtype=np.complex128).reshape(-1)
    if c.size == 0 or not np.any(c != 0):
        return 0.0
    total = 0.0
    for start in range(0, samples, chunk):
        count = min(chunk, samples - start)
        g = gaussian_matrix(seed, count, c.size, sample_offset=start)
        total += float(np.sum(np.abs(g @ c) ** p))
    return float((total / samples) ** (1.0 / p))


def expected_randomized_norm_squared(f: Field) -> float:
    """Closed-form E ||f^omega||_L2^2 = sum_k ||psi(D-k) f||_L2^2."""
    spec = f.spec
    F = forward_transform(f)
    acc = np.zeros(spec.shape)
    for _, _, windows, block in projection_blocks(spec):
        acc[windows] += block**2
    return float(spec.frequency_cell_volume * np.sum(acc * np.abs(F.coeffs) ** 2))


def lattice_for(f: Field) -> UnitLattice:
    return unit_lattice(f.spec)
