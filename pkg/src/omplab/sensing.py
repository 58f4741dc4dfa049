"""Problem-instance construction: sensing matrices, sparse signals, noise.

Randomness policy, shared package-wide: every generator takes an explicit
64-bit seed and draws from numpy's Philox bit generator (Philox 4x64-10, a
counter-based PRNG) keyed directly with that seed, so streams are reproducible
across platforms and insensitive to the order in which trials run. Derived
seeds are produced with the SplitMix64 mixer, so parallel trials get
independent streams from ``master_seed ^ splitmix64(trial_index)``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .linalg import (
    as_matrix,
    as_vector,
    read_matrix,
    read_vector,
    write_matrix,
    write_vector,
)

MASK64 = (1 << 64) - 1

NOISE_KINDS = ("none", "l2_ball", "l2_sphere")
SIGN_PATTERNS = ("random", "positive")


def splitmix64(value):
    """SplitMix64 mixer; a fixed, documented 64-bit hash used to split seeds."""
    z = (int(value) + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def philox_generator(seed):
    """Generator backed by Philox 4x64-10 keyed directly with ``seed``."""
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """A sparse vector stored as (dimension, sorted support, nonzero values).

    The empty signal (no support) is allowed; it is what the solver returns
    for degenerate measurements.
    """

    dimension: int
    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        n = int(self.dimension)
        if n < 1:
            raise ValueError("dimension must be positive")
        sup = np.asarray(self.support, dtype=np.intp).reshape(-1)
        val = np.asarray(self.values, dtype=float).reshape(-1)
        if sup.size != val.size:
            raise ValueError("support and values must have equal length")
        if sup.size:
            if sup.min() < 0 or sup.max() >= n:
                raise ValueError(f"support indices must lie in [0, {n})")
            if np.any(np.diff(sup) <= 0):
                raise ValueError("support must be strictly increasing")
            if not np.all(np.isfinite(val)) or np.any(val == 0.0):
                raise ValueError("values must be finite and nonzero")
        object.__setattr__(self, "dimension", n)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "values", val)

    @property
    def sparsity(self):
        return int(self.support.size)

    def min_magnitude(self):
        """Smallest |value|; +inf for the empty signal."""
        if self.values.size == 0:
            return math.inf
        return float(np.abs(self.values).min())

    def to_dense(self):
        dense = np.zeros(self.dimension)
        dense[self.support] = self.values
        return dense


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model: 'none', 'l2_ball' (||v|| <= eps) or 'l2_sphere' (||v|| = eps)."""

    kind: str
    epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A measurement y = A x + v together with its ingredients."""

    matrix: np.ndarray
    signal: SparseSignal
    noise: np.ndarray
    measurement: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.matrix)
        v = as_vector(self.noise, "noise")
        y = as_vector(self.measurement, "measurement")
        if A.shape[1] != self.signal.dimension:
            raise ValueError("matrix columns must match signal dimension")
        if A.shape[0] != v.size or A.shape[0] != y.size:
            raise ValueError("noise and measurement must have matrix.rows entries")
        recon = A @ self.signal.to_dense() + v
        scale = 1.0 + float(np.abs(y).max()) if y.size else 1.0
        if np.abs(recon - y).max() > 1e-12 * scale:
            raise ValueError("measurement does not reconstruct as A x + v")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "noise", v)
        object.__setattr__(self, "measurement", y)


def noise_vector(spec, m):
    """Draw the noise vector described by ``spec`` for an m-row instance.

    Draw order is fixed: the Gaussian direction first, then (ball only) the
    radius variate, so streams stay reproducible.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if spec.kind == "none" or spec.epsilon == 0.0:
        return np.zeros(m)
    rng = philox_generator(spec.seed)
    g = rng.standard_normal(m)
    norm = float(np.linalg.norm(g))
    while norm == 0.0:  # unreachable in practice, kept for strictness
        g = rng.standard_normal(m)
        norm = float(np.linalg.norm(g))
    if spec.kind == "l2_sphere":
        return g * (spec.epsilon / norm)
    radius = spec.epsilon * float(rng.random()) ** (1.0 / m)
    return g * (radius / norm)


def generate_measurement(A, signal, noise_spec):
    """Form y = A x + v with v drawn per ``noise_spec``."""
    A = as_matrix(A)
    if A.shape[1] != signal.dimension:
        raise ValueError(
            f"matrix has {A.shape[1]} columns but signal dimension is "
            f"{signal.dimension}"
        )
    v = noise_vector(noise_spec, A.shape[0])
    y = A @ signal.to_dense() + v
    return ProblemInstance(matrix=A, signal=signal, noise=v, measurement=y)


def gaussian_sensing_matrix(m, n, seed, normalize_columns=True):
    """m x n matrix with i.i.d. N(0, 1/m) entries from a Philox stream.

    With 1/m variance the raw columns concentrate near unit norm, which keeps
    restricted-isometry constants in a useful range at desk scale. With
    ``normalize_columns`` every column is rescaled to exact unit length.
    """
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    rng = philox_generator(seed)
    A = rng.standard_normal((m, n)) / math.sqrt(m)
    if normalize_columns:
        norms = np.linalg.norm(A, axis=0)
        if np.any(norms == 0.0):
            raise ArithmeticError("drew a zero column; reseed")
        A = A / norms
    return as_matrix(A)


def lemma1_example_instance(delta):
    """The 3x3 worked example: a diagonal matrix whose order-3 RIC is delta.

    Returns (A, signal, S) where A = diag(sqrt(1+delta), sqrt(1-delta),
    sqrt(1+delta)), the signal is 2-sparse with support {0, 1} and unit
    values, and S = {0} is the partial selection used by the selection-margin
    identity checks.
    """
    if not (0.0 <= delta < 1.0):
        raise ValueError("delta must lie in [0, 1)")
    A = np.diag(
        [math.sqrt(1.0 + delta), math.sqrt(1.0 - delta), math.sqrt(1.0 + delta)]
    )
    signal = SparseSignal(dimension=3, support=[0, 1], values=[1.0, 1.0])
    S = np.array([0], dtype=np.intp)
    return as_matrix(A), signal, S


def random_sparse_signal(n, K, min_mag, dynamic_range, seed, sign_pattern="random"):
    """K-sparse signal with uniform support and magnitudes bounded below.

    Support is a uniform K-subset of [0, n) (Fisher-Yates permutation prefix).
    Magnitudes are uniform on [min_mag, min_mag * dynamic_range], so
    ``min_magnitude() >= min_mag`` is guaranteed. Draw order: support,
    magnitudes, signs.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if K < 1 or K > n:
        raise ValueError(f"K must lie in [1, {n}], got {K}")
    if min_mag <= 0:
        raise ValueError("min_mag must be positive")
    if dynamic_range < 1:
        raise ValueError("dynamic_range must be at least 1")
    if sign_pattern not in SIGN_PATTERNS:
        raise ValueError(f"sign_pattern must be one of {SIGN_PATTERNS}")
    rng = philox_generator(seed)
    support = np.sort(rng.permutation(n)[:K])
    magnitudes = rng.uniform(min_mag, min_mag * dynamic_range, size=K)
    if sign_pattern == "random":
        signs = rng.integers(0, 2, size=K) * 2.0 - 1.0
    else:
        signs = np.ones(K)
    return SparseSignal(dimension=n, support=support, values=magnitudes * signs)


# ---------------------------------------------------------------------------
# Text serialization. Signal format: first line "n K", then K lines of
# "index value". A problem instance serializes as a directory holding
# A.mat, x.sig, v.vec and y.vec in the shared formats.
# ---------------------------------------------------------------------------


def format_signal(signal):
    lines = [f"{signal.dimension} {signal.sparsity}"]
    for idx, val in zip(signal.support, signal.values):
        lines.append(f"{int(idx)} {val:.17g}")
    return "\n".join(lines) + "\n"


def parse_signal(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty signal text")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError("signal header must be 'n K'")
    n, k = int(header[0]), int(header[1])
    if len(lines) - 1 != k:
        raise ValueError(f"expected {k} entries, got {len(lines) - 1}")
    support = []
    values = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError("signal entries must be 'index value'")
        support.append(int(parts[0]))
        values.append(float(parts[1]))
    return SparseSignal(dimension=n, support=support, values=values)


def write_signal(path, signal):
    with open(path, "w") as fh:
        fh.write(format_signal(signal))


def read_signal(path):
    with open(path) as fh:
        return parse_signal(fh.read())


def save_problem_instance(directory, instance):
    os.makedirs(directory, exist_ok=True)
    write_matrix(os.path.join(directory, "A.mat"), instance.matrix)
    write_signal(os.path.join(directory, "x.sig"), instance.signal)
    write_vector(os.path.join(directory, "v.vec"), instance.noise)
    write_vector(os.path.join(directory, "y.vec"), instance.measurement)


def load_problem_instance(directory):
    A = read_matrix(os.path.join(directory, "A.mat"))
    signal = read_signal(os.path.join(directory, "x.sig"))
    v = read_vector(os.path.join(directory, "v.vec"))
    y = read_vector(os.path.join(directory, "y.vec"))
    return ProblemInstance(matrix=A, signal=signal, noise=v, measurement=y)
