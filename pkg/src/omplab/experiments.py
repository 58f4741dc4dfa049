"""Monte Carlo harnesses: guarantee validation, phase tables, lemma sweeps
and the sharpness probe.

Every experiment is a pure function of (config, master_seed). Trial t draws
its randomness from ``master_seed ^ splitmix64(t)`` with t a global trial
index, so runs are reproducible, order-insensitive, and byte-identical across
parallelism levels. Trials inside a cell may execute on a process pool;
results are reduced in trial order.

Reporting separates the conditional claim from unconditioned context: the
recovery guarantee is conditional on the exactly computed RIC, so
``theorem1_validation`` enforces a conditional success rate of exactly 1.0
and fails loudly (serializing the counterexample) on any violation, while
unconditioned success rates belong to ``phase_table``.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, projection_residual, submatrix_columns
from .omp import GuaranteeViolation, StopRule, omp_run, write_trace_csv
from .ripcheck import (
    DEFAULT_SUBSET_BUDGET,
    CapacityError,
    exact_ric,
    min_magnitude_bound,
    sharp_ric_bound,
    verify_lemma1,
)
from .sensing import (
    MASK64,
    NoiseSpec,
    ProblemInstance,
    SparseSignal,
    gaussian_sensing_matrix,
    generate_measurement,
    lemma1_example_instance,
    load_problem_instance,
    philox_generator,
    random_sparse_signal,
    save_problem_instance,
    splitmix64,
)

ENSEMBLES = ("gaussian_normalized", "gaussian_raw", "lemma1_family")
MIN_MAG_POLICIES = ("theorem_bound", "fixed")

_MATRIX_TAG = 0x11
_SIGNAL_TAG = 0x22
_NOISE_TAG = 0x33


def _derived_seed(trial_seed, tag):
    return splitmix64((trial_seed ^ tag) & MASK64)


@dataclass(frozen=True)
class ExperimentConfig:
    """Reproducible sweep description.

    ``m_values`` x ``n_values`` x ``k_values`` x ``epsilon_values`` defines
    the cell grid (in that order); ``trials`` run per cell. The signal
    magnitude floor follows ``min_mag_policy``:

    * ``theorem_bound``: margin_factor times the magnitude bound at the
      trial's exact RIC. Where the bound is undefined (no exact RIC, as in
      over-budget phase cells, or an RIC at or above the threshold) the
      RIC-0 value ``2 eps`` stands in, and a floor of exactly 0 (noiseless
      cells) is replaced by a unit floor, since the guarantee then imposes
      no constraint.
    * ``fixed``: always ``min_mag_fixed``.
    """

    m_values: tuple
    n_values: tuple
    k_values: tuple
    epsilon_values: tuple
    trials: int
    min_mag_policy: str = "theorem_bound"
    margin_factor: float = 1.01
    min_mag_fixed: float = 1.0
    dynamic_range: float = 10.0
    sign_pattern: str = "random"
    ensemble: str = "gaussian_normalized"
    lemma1_deltas: tuple = (0.1, 0.2, 0.3, 0.4, 0.5)
    master_seed: int = 0
    parallelism: int = 1
    subset_budget: int = DEFAULT_SUBSET_BUDGET
    failure_dir: str = "theorem1-failures"

    def __post_init__(self):
        for name in ("m_values", "n_values", "k_values", "epsilon_values"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "lemma1_deltas", tuple(self.lemma1_deltas))
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.min_mag_policy not in MIN_MAG_POLICIES:
            raise ValueError(f"min_mag_policy must be one of {MIN_MAG_POLICIES}")
        if self.min_mag_policy == "theorem_bound" and self.margin_factor <= 1.0:
            raise ValueError("margin_factor must exceed 1 for theorem_bound policy")
        if self.min_mag_fixed <= 0:
            raise ValueError("min_mag_fixed must be positive")
        if self.dynamic_range < 1:
            raise ValueError("dynamic_range must be at least 1")
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"ensemble must be one of {ENSEMBLES}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be positive")
        if any(e < 0 for e in self.epsilon_values):
            raise ValueError("epsilon values must be non-negative")
        for m, n, k, _ in self.cells():
            if m < 1 or n < 1 or k < 1:
                raise ValueError("m, n and K must all be positive")
            if k > n:
                raise ValueError(f"cell (m={m}, n={n}, K={k}) has K > n")
        if self.ensemble == "lemma1_family":
            if not all(0.0 <= d < 1.0 for d in self.lemma1_deltas):
                raise ValueError("lemma1_deltas must lie in [0, 1)")
            for m, n, k, _ in self.cells():
                if (m, n, k) != (3, 3, 2):
                    raise ValueError(
                        "lemma1_family requires m = n = 3 and K = 2 cells"
                    )

    def cells(self):
        """Cell grid in deterministic (m, n, k, epsilon) product order."""
        return list(
            itertools.product(
                self.m_values, self.n_values, self.k_values, self.epsilon_values
            )
        )


_CONFIG_INT_LISTS = {"m": "m_values", "n": "n_values", "k": "k_values"}
_CONFIG_FLOAT_LISTS = {"epsilon": "epsilon_values", "lemma1_deltas": "lemma1_deltas"}
_CONFIG_INTS = {
    "trials": "trials",
    "master_seed": "master_seed",
    "parallelism": "parallelism",
    "subset_budget": "subset_budget",
}
_CONFIG_FLOATS = {
    "margin_factor": "margin_factor",
    "min_mag_fixed": "min_mag_fixed",
    "dynamic_range": "dynamic_range",
}
_CONFIG_STRS = {
    "min_mag_policy": "min_mag_policy",
    "sign_pattern": "sign_pattern",
    "ensemble": "ensemble",
    "failure_dir": "failure_dir",
}


def parse_config(text):
    """Parse the flat ``key = value`` config format (lists are comma-separated).

    Required keys: m, n, k, epsilon, trials. Lines starting with '#' and
    blank lines are ignored; unknown keys are an error.
    """
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno} is not 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _CONFIG_INT_LISTS:
            kwargs[_CONFIG_INT_LISTS[key]] = tuple(
                int(tok) for tok in value.replace(",", " ").split()
            )
        elif key in _CONFIG_FLOAT_LISTS:
            kwargs[_CONFIG_FLOAT_LISTS[key]] = tuple(
                float(tok) for tok in value.replace(",", " ").split()
            )
        elif key in _CONFIG_INTS:
            kwargs[_CONFIG_INTS[key]] = int(value)
        elif key in _CONFIG_FLOATS:
            kwargs[_CONFIG_FLOATS[key]] = float(value)
        elif key in _CONFIG_STRS:
            kwargs[_CONFIG_STRS[key]] = value
        else:
            raise ValueError(f"unknown config key {key!r} on line {lineno}")
    missing = [
        k
        for k, attr in (
            ("m", "m_values"),
            ("n", "n_values"),
            ("k", "k_values"),
            ("epsilon", "epsilon_values"),
            ("trials", "trials"),
        )
        if attr not in kwargs
    ]
    if missing:
        raise ValueError(f"config is missing required keys: {missing}")
    return ExperimentConfig(**kwargs)


def read_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


@dataclass(frozen=True)
class ExperimentRow:
    """Aggregated outcome of one (m, n, K, epsilon) cell.

    ``exact_support_rate`` counts exact recoveries over all trials of the
    cell (trials skipped for failing the RIC precondition count as
    non-recoveries there). Conditions fields are None when condition
    checking was not performed; ``conditional_success_rate`` is None when no
    trial held the conditions.
    """

    m: int
    n: int
    k: int
    epsilon: float
    trials: int
    exact_support_rate: float
    conditions_held_count: int | None
    conditional_success_rate: float | None
    mean_iterations: float | None
    rank_failures: int


EXPERIMENT_CSV_HEADER = (
    "m,n,K,epsilon,trials,exact_support_rate,conditions_held_count,"
    "conditional_success_rate,mean_iterations,rank_failures"
)


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_csv_text(rows):
    lines = [EXPERIMENT_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                _csv_cell(v)
                for v in (
                    r.m,
                    r.n,
                    r.k,
                    r.epsilon,
                    r.trials,
                    r.exact_support_rate,
                    r.conditions_held_count,
                    r.conditional_success_rate,
                    r.mean_iterations,
                    r.rank_failures,
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_rows_csv(path, rows):
    with open(path, "w") as fh:
        fh.write(rows_csv_text(rows))


# ---------------------------------------------------------------------------
# Trial execution. Workers are pure functions of a picklable task tuple, so
# pool results are identical to serial results regardless of worker count.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _TrialTask:
    mode: str  # "theorem1" | "phase"
    m: int
    n: int
    k: int
    epsilon: float
    trial_seed: int
    ensemble: str
    min_mag_policy: str
    margin_factor: float
    min_mag_fixed: float
    dynamic_range: float
    sign_pattern: str
    lemma1_deltas: tuple
    subset_budget: int
    check_conditions: bool


@dataclass(frozen=True)
class _TrialOutcome:
    held: bool
    attempted: bool
    success: bool
    iterations: int
    rank_failure: bool


def _draw_matrix(task):
    seed = _derived_seed(task.trial_seed, _MATRIX_TAG)
    if task.ensemble == "lemma1_family":
        rng = philox_generator(seed)
        delta = task.lemma1_deltas[int(rng.integers(len(task.lemma1_deltas)))]
        A, _, _ = lemma1_example_instance(delta)
        return A
    normalize = task.ensemble == "gaussian_normalized"
    return gaussian_sensing_matrix(task.m, task.n, seed, normalize_columns=normalize)


def _min_mag_floor(task, mm_bound):
    if task.min_mag_policy == "fixed":
        return task.min_mag_fixed
    floor = task.margin_factor * (2.0 * task.epsilon if mm_bound is None else mm_bound)
    return floor if floor > 0.0 else 1.0


def _stop_rule(task):
    # Noiseless cells reduce to the K-iteration guarantee; a residual
    # threshold of exactly zero is never reached in floating point.
    if task.epsilon > 0.0:
        return StopRule.residual_at_most(task.epsilon)
    return StopRule.max_iterations(task.k)


def _build_trial(task, mm_bound):
    min_mag = _min_mag_floor(task, mm_bound)
    signal = random_sparse_signal(
        task.n,
        task.k,
        min_mag,
        task.dynamic_range,
        _derived_seed(task.trial_seed, _SIGNAL_TAG),
        sign_pattern=task.sign_pattern,
    )
    noise = NoiseSpec(
        kind="l2_sphere",
        epsilon=task.epsilon,
        seed=_derived_seed(task.trial_seed, _NOISE_TAG),
    )
    return signal, noise


def _run_trial(task):
    A = _draw_matrix(task)
    delta = None
    ric_ok = None
    if task.mode == "theorem1" or task.check_conditions:
        delta = exact_ric(A, task.k + 1, budget=task.subset_budget).delta
        ric_ok = delta < sharp_ric_bound(task.k)
    if task.mode == "theorem1" and not ric_ok:
        return _TrialOutcome(
            held=False, attempted=False, success=False, iterations=0,
            rank_failure=False,
        )
    mm_bound = None
    if ric_ok:
        mm_bound = min_magnitude_bound(delta, task.k, task.epsilon)
    signal, noise = _build_trial(task, mm_bound)
    held = bool(ric_ok) and mm_bound is not None and (
        signal.min_magnitude() > mm_bound
    )
    instance = generate_measurement(A, signal, noise)
    result = omp_run(
        A, instance.measurement, _stop_rule(task), true_support=signal.support
    )
    exact = bool(np.array_equal(result.recovered_support, signal.support))
    if task.mode == "theorem1":
        success = exact and result.iterations == task.k
    else:
        success = exact
    return _TrialOutcome(
        held=held,
        attempted=True,
        success=success,
        iterations=result.iterations,
        rank_failure=result.stopped_by == "rank_failure",
    )


def _rebuild_failed_trial(task):
    """Recreate the instance and trace of a trial for serialization."""
    A = _draw_matrix(task)
    delta = exact_ric(A, task.k + 1, budget=task.subset_budget).delta
    mm_bound = min_magnitude_bound(delta, task.k, task.epsilon)
    signal, noise = _build_trial(task, mm_bound)
    instance = generate_measurement(A, signal, noise)
    result = omp_run(
        A, instance.measurement, _stop_rule(task), true_support=signal.support
    )
    return instance, result, delta


def _map_trials(tasks, parallelism):
    if parallelism <= 1 or len(tasks) <= 1:
        return [_run_trial(t) for t in tasks]
    chunk = max(1, len(tasks) // (parallelism * 4))
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_trial, tasks, chunksize=chunk))


def _make_tasks(config, mode):
    cells = config.cells()
    tasks_per_cell = []
    for ci, (m, n, k, eps) in enumerate(cells):
        if mode == "phase":
            check = math.comb(n, k + 1) <= config.subset_budget and k + 1 <= n
        else:
            check = True
        cell_tasks = []
        for j in range(config.trials):
            t = ci * config.trials + j
            trial_seed = (config.master_seed ^ splitmix64(t)) & MASK64
            cell_tasks.append(
                _TrialTask(
                    mode=mode,
                    m=m,
                    n=n,
                    k=k,
                    epsilon=eps,
                    trial_seed=trial_seed,
                    ensemble=config.ensemble,
                    min_mag_policy=config.min_mag_policy,
                    margin_factor=config.margin_factor,
                    min_mag_fixed=config.min_mag_fixed,
                    dynamic_range=config.dynamic_range,
                    sign_pattern=config.sign_pattern,
                    lemma1_deltas=config.lemma1_deltas,
                    subset_budget=config.subset_budget,
                    check_conditions=check,
                )
            )
        tasks_per_cell.append(((m, n, k, eps), cell_tasks))
    return tasks_per_cell


def _aggregate_cell(cell, outcomes, with_conditions):
    m, n, k, eps = cell
    trials = len(outcomes)
    successes = sum(1 for o in outcomes if o.success)
    attempted = [o for o in outcomes if o.attempted]
    rank_failures = sum(1 for o in attempted if o.rank_failure)
    mean_iters = (
        sum(o.iterations for o in attempted) / len(attempted) if attempted else None
    )
    if with_conditions:
        held = [o for o in outcomes if o.held]
        cond_count = len(held)
        cond_rate = (
            sum(1 for o in held if o.success) / cond_count if cond_count else None
        )
    else:
        cond_count = None
        cond_rate = None
    return ExperimentRow(
        m=m,
        n=n,
        k=k,
        epsilon=float(eps),
        trials=trials,
        exact_support_rate=successes / trials,
        conditions_held_count=cond_count,
        conditional_success_rate=cond_rate,
        mean_iterations=mean_iters,
        rank_failures=rank_failures,
    )


def theorem1_validation(config):
    """Validate the support-recovery guarantee cell by cell.

    Per trial: draw the matrix, compute the exact order-(K+1) RIC, skip and
    count trials violating the RIC condition, draw the signal at the
    magnitude floor, add sphere noise, run the solver and record whether the
    exact support came back in exactly K iterations. Any condition-holding
    trial that fails is serialized under ``config.failure_dir`` and raises
    GuaranteeViolation: the conditional success rate must be exactly 1.0.
    """
    for m, n, k, _ in config.cells():
        if k + 1 > n:
            raise ValueError(f"cell (m={m}, n={n}, K={k}) needs K+1 <= n")
        count = math.comb(n, k + 1)
        if count > config.subset_budget:
            raise CapacityError(
                n, k + 1, count, config.subset_budget,
                context=f"required by cell (m={m}, n={n}, K={k})",
            )
    rows = []
    for cell, tasks in _make_tasks(config, "theorem1"):
        outcomes = _map_trials(tasks, config.parallelism)
        for j, outcome in enumerate(outcomes):
            if outcome.held and not outcome.success:
                instance, result, delta = _rebuild_failed_trial(tasks[j])
                m, n, k, eps = cell
                directory = os.path.join(
                    config.failure_dir,
                    f"cell_m{m}_n{n}_K{k}_eps{eps}_trial{j}",
                )
                save_problem_instance(directory, instance)
                write_trace_csv(os.path.join(directory, "trace.csv"), result)
                with open(os.path.join(directory, "report.json"), "w") as fh:
                    json.dump(
                        {
                            "delta": delta,
                            "ric_bound": sharp_ric_bound(k),
                            "epsilon": eps,
                            "recovered_support": [
                                int(i) for i in result.recovered_support
                            ],
                            "true_support": [int(i) for i in instance.signal.support],
                        },
                        fh,
                        indent=2,
                    )
                raise GuaranteeViolation(
                    f"recovery guarantee violated in cell {cell}, trial {j}; "
                    f"instance serialized to {directory}"
                )
        rows.append(_aggregate_cell(cell, outcomes, with_conditions=True))
    return rows


def phase_table(config):
    """Unconditioned exact-support-recovery rate per cell.

    Condition checking is performed where the enumeration budget allows it
    (conditions columns are empty elsewhere). Output is a pure function of
    (config, master_seed), byte-identical across parallelism settings.
    """
    rows = []
    for cell, tasks in _make_tasks(config, "phase"):
        outcomes = _map_trials(tasks, config.parallelism)
        with_conditions = tasks[0].check_conditions
        rows.append(_aggregate_cell(cell, outcomes, with_conditions))
    return rows


# ---------------------------------------------------------------------------
# Sharpness probe: search for a matrix at a prescribed RIC where greedy
# selection provably goes wrong on the first iteration.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FailureInstance:
    """A verified counterexample: RIC at or above the sharp bound, greedy miss.

    The trace must show a noiseless K-iteration run recovering something
    other than the signal support, and the verified RIC may not sit below
    the sharp bound (such an instance would contradict the guarantee).
    """

    matrix: np.ndarray
    signal: SparseSignal
    verified_delta: float
    sharp_bound: float
    omp_trace: object

    def __post_init__(self):
        if self.verified_delta < self.sharp_bound - 1e-10:
            raise ValueError(
                "verified delta sits below the sharp bound; not a valid "
                "counterexample"
            )
        if np.array_equal(self.omp_trace.recovered_support, self.signal.support):
            raise ValueError("trace recovers the true support; not a failure")


def _probe_family_gram(K, a, b, nu2):
    """Gram of the probe family: equicorrelated support block (correlation a),
    one off-support column (index 0) correlated b with every support column,
    off-column squared norm nu2."""
    G = np.full((K + 1, K + 1), a)
    np.fill_diagonal(G, 1.0)
    G[0, 0] = nu2
    G[0, 1:] = b
    G[1:, 0] = b
    return G


def _probe_candidate(K, t, sharp, a, nu2, slack):
    """Build and fully verify one probe candidate; None when it fails."""
    mu = 1.0 + a * (K - 1)  # correlation of each support column with A x
    if mu <= 1e-9:
        return None
    # At b = mu / K the off column ties the best in-support correlation, and
    # the off column sits at index 0, so the smallest-index tie-break makes a
    # tie already a wrong selection; slack > 0 makes the miss strict.
    b = (mu / K) * (1.0 + slack)
    G = _probe_family_gram(K, a, b, nu2)
    try:
        w = np.linalg.eigvalsh(G)
    except np.linalg.LinAlgError:
        return None
    lo, hi = float(w[0]), float(w[-1])
    if lo <= 1e-9:
        return None
    if (hi - lo) / (hi + lo) > t:  # best delta this shape can reach
        return None
    scale = (1.0 + t) / hi  # upper branch: scale * hi - 1 == t
    if 1.0 - scale * lo > t + 1e-9:
        return None
    try:
        L = np.linalg.cholesky(scale * G)
    except np.linalg.LinAlgError:
        return None
    A = as_matrix(L.T)  # upper-triangular factor, A^T A = scale * G
    signal = SparseSignal(
        dimension=K + 1, support=np.arange(1, K + 1), values=np.ones(K)
    )
    delta = exact_ric(A, K + 1).delta
    if abs(delta - t) > 1e-6 or delta < sharp - 1e-10:
        return None
    y = A @ signal.to_dense()
    result = omp_run(
        A, y, StopRule.max_iterations(K), true_support=signal.support
    )
    if result.trace and result.trace[0].in_true_support:
        return None
    if np.array_equal(result.recovered_support, signal.support):
        return None
    return FailureInstance(
        matrix=A,
        signal=signal,
        verified_delta=delta,
        sharp_bound=sharp,
        omp_trace=result,
    )


def sharpness_probe(K, t, search_budget, seed):
    """Search for a verified greedy-failure instance with RIC within 1e-6 of t.

    Phase one sweeps a structured grid over the probe family; phase two
    spends the remaining budget on random restarts (random shape parameters
    plus a small random symmetric Gram perturbation, rescaled back onto the
    target RIC). Every returned instance is verified end to end by exact RIC
    computation and an actual noiseless solver run. ``None`` (not found) is a
    legitimate outcome: existence at every admissible t is known, but this
    search is not guaranteed to construct a witness.
    """
    if int(K) < 2:
        raise ValueError("K must be at least 2")
    K = int(K)
    sharp = sharp_ric_bound(K)
    if not (sharp <= t < 1.0):
        raise ValueError(f"t must lie in [1/sqrt(K+1), 1) = [{sharp:.6f}, 1)")
    if search_budget < 1:
        raise ValueError("search_budget must be positive")
    budget_left = int(search_budget)

    for a in np.linspace(-0.95, 0.95, 96):
        for nu2 in np.linspace(0.05, 4.0, 80):
            for slack in (1e-9, 1e-7, 1e-5, 1e-3):
                if budget_left == 0:
                    return None
                budget_left -= 1
                found = _probe_candidate(K, t, sharp, a, nu2, slack)
                if found is not None:
                    return found

    rng = philox_generator(seed)
    while budget_left > 0:
        budget_left -= 1
        a = float(rng.uniform(-0.98, 0.98))
        nu2 = float(rng.uniform(0.05, 5.0))
        slack = 10.0 ** float(rng.uniform(-10.0, -2.0))
        mu = 1.0 + a * (K - 1)
        if mu <= 1e-9:
            continue
        b = (mu / K) * (1.0 + slack)
        G = _probe_family_gram(K, a, b, nu2)
        E = rng.standard_normal((K + 1, K + 1))
        G = G + (10.0 ** float(rng.uniform(-6.0, -2.5))) * (E + E.T) / 2.0
        try:
            w = np.linalg.eigvalsh(G)
        except np.linalg.LinAlgError:
            continue
        lo, hi = float(w[0]), float(w[-1])
        if lo <= 1e-9 or (hi - lo) / (hi + lo) > t:
            continue
        scale = (1.0 + t) / hi
        if 1.0 - scale * lo > t + 1e-9:
            continue
        try:
            L = np.linalg.cholesky(scale * G)
        except np.linalg.LinAlgError:
            continue
        A = as_matrix(L.T)
        signal = SparseSignal(
            dimension=K + 1, support=np.arange(1, K + 1), values=np.ones(K)
        )
        delta = exact_ric(A, K + 1).delta
        if abs(delta - t) > 1e-6 or delta < sharp - 1e-10:
            continue
        y = A @ signal.to_dense()
        result = omp_run(
            A, y, StopRule.max_iterations(K), true_support=signal.support
        )
        if np.array_equal(result.recovered_support, signal.support):
            continue
        return FailureInstance(
            matrix=A,
            signal=signal,
            verified_delta=delta,
            sharp_bound=sharp,
            omp_trace=result,
        )
    return None


def save_failure_instance(directory, fi):
    """Serialize a FailureInstance as an instance directory plus trace/report."""
    K = fi.signal.sparsity
    y = fi.matrix @ fi.signal.to_dense()
    instance = ProblemInstance(
        matrix=fi.matrix,
        signal=fi.signal,
        noise=np.zeros(fi.matrix.shape[0]),
        measurement=y,
    )
    save_problem_instance(directory, instance)
    write_trace_csv(os.path.join(directory, "trace.csv"), fi.omp_trace)
    with open(os.path.join(directory, "report.json"), "w") as fh:
        json.dump(
            {
                "verified_delta": fi.verified_delta,
                "sharp_bound": fi.sharp_bound,
                "k": K,
                "recovered_support": [int(i) for i in fi.omp_trace.recovered_support],
            },
            fh,
            indent=2,
        )


def load_failure_instance(directory, budget=DEFAULT_SUBSET_BUDGET):
    """Reload a FailureInstance, re-running the solver to rebuild the trace."""
    instance = load_problem_instance(directory)
    with open(os.path.join(directory, "report.json")) as fh:
        report = json.load(fh)
    K = instance.signal.sparsity
    result = omp_run(
        instance.matrix,
        instance.measurement,
        StopRule.max_iterations(K),
        true_support=instance.signal.support,
    )
    return FailureInstance(
        matrix=instance.matrix,
        signal=instance.signal,
        verified_delta=float(report["verified_delta"]),
        sharp_bound=float(report["sharp_bound"]),
        omp_trace=result,
    )


def verify_failure_instance(fi, budget=DEFAULT_SUBSET_BUDGET):
    """Re-verify a FailureInstance from scratch.

    Returns a dict with the recomputed RIC, whether it matches the stored
    value to 1e-10, and whether the noiseless K-iteration run still misses
    the support; ``ok`` is the conjunction.
    """
    K = fi.signal.sparsity
    delta = exact_ric(fi.matrix, K + 1, budget=budget).delta
    result = omp_run(
        fi.matrix,
        fi.matrix @ fi.signal.to_dense(),
        StopRule.max_iterations(K),
        true_support=fi.signal.support,
    )
    delta_matches = abs(delta - fi.verified_delta) <= 1e-10
    still_fails = not np.array_equal(result.recovered_support, fi.signal.support)
    return {
        "delta_recomputed": delta,
        "delta_matches": delta_matches,
        "still_fails": still_fails,
        "ok": bool(delta_matches and still_fails),
    }


# ---------------------------------------------------------------------------
# Lemma sweep: randomized verification of the four supporting inequalities,
# with exactly computed RICs throughout.
# ---------------------------------------------------------------------------

# Shapes rotate per instance. The selection inequality needs an exact RIC
# below 1 at order K+1, which random designs only deliver when rows
# comfortably exceed columns, so higher K uses taller matrices; the diagonal
# worked-example family covers K = 2 at exactly known RIC, and identity
# instances pin the zero-RIC closed forms.
_SWEEP_SHAPES = (
    ("gaussian", 12, 18, 1),
    ("gaussian", 64, 16, 2),
    ("gaussian", 128, 14, 3),
    ("lemma1_family", 3, 3, 2),
    ("identity", 8, 8, 2),
)


@dataclass(frozen=True)
class LemmaSweepReport:
    """Margins and counters from one lemma sweep. Zero violations expected."""

    instances: int
    lemma1_checks: int
    lemma1_skipped: int
    min_margin_lemma1: float
    min_margin_lemma2: float
    min_margin_lemma3: float
    min_margin_lemma4: float
    violations: int


def lemma_sweep(seed, instances, failure_dir="lemma-sweep-failures"):
    """Check the four supporting inequalities on randomized instances.

    Per instance: exact RICs at all orders up to K+1 feed a monotonicity
    check; a random ambient vector checks the correlation-energy bound
    ||A_S^T w||^2 <= (1 + delta_k) ||w||^2; a random coefficient vector
    checks the projected-energy sandwich (1 - delta) ||u||^2 <=
    ||P A_{S2 minus S1} u||^2 <= (1 + delta) ||u||^2; and every proper subset
    of the support feeds the selection inequality whenever the order-(K+1)
    RIC is below 1 (it makes no claim otherwise; such instances are counted
    as skipped). Any violation serializes the instance and raises.
    """
    if instances < 1:
        raise ValueError("instances must be positive")
    margins = {1: math.inf, 2: math.inf, 3: math.inf, 4: math.inf}
    lemma1_checks = 0
    lemma1_skipped = 0
    violations = []

    for i in range(instances):
        trial_seed = (int(seed) ^ splitmix64(i)) & MASK64
        kind, m, n, K = _SWEEP_SHAPES[i % len(_SWEEP_SHAPES)]
        rng = philox_generator(_derived_seed(trial_seed, 0x77))
        if kind == "lemma1_family":
            delta_grid = (0.1, 0.2, 0.3, 0.4, 0.5)
            A, signal, _ = lemma1_example_instance(
                delta_grid[i % len(delta_grid)]
            )
        elif kind == "identity":
            A = as_matrix(np.eye(n))
            signal = random_sparse_signal(
                n, K, 1.0, 10.0, _derived_seed(trial_seed, _SIGNAL_TAG)
            )
        else:
            A = gaussian_sensing_matrix(
                m, n, _derived_seed(trial_seed, _MATRIX_TAG)
            )
            signal = random_sparse_signal(
                n, K, 1.0, 10.0, _derived_seed(trial_seed, _SIGNAL_TAG)
            )

        deltas = [exact_ric(A, order).delta for order in range(1, K + 2)]

        # monotonicity of the RIC in the order
        for lower, upper in zip(deltas, deltas[1:]):
            margin = upper - lower
            margins[2] = min(margins[2], margin)
            if margin < -1e-10:
                violations.append((i, "lemma2", margin))

        # correlation energy against a random ambient vector
        w = rng.standard_normal(m)
        sub = A[:, signal.support]
        margin3 = (1.0 + deltas[K - 1]) * float(w @ w) - float(
            np.linalg.norm(sub.T @ w) ** 2
        )
        margins[3] = min(margins[3], margin3)
        if margin3 < -1e-9:
            violations.append((i, "lemma3", margin3))

        # projected energy sandwich; alternate S1 inside and outside support
        if i % 2 == 0 and K >= 2:
            s1 = signal.support[: K // 2]
            union_order = K
        else:
            comp = np.setdiff1d(np.arange(A.shape[1]), signal.support)
            s1 = comp[:1]
            union_order = K + 1
        rest = np.setdiff1d(signal.support, s1)
        if rest.size:
            u = rng.standard_normal(rest.size)
            z = projection_residual(
                submatrix_columns(A, s1), submatrix_columns(A, rest) @ u
            )
            energy = float(z @ z)
            d_union = deltas[union_order - 1]
            uu = float(u @ u)
            low_margin = energy - (1.0 - d_union) * uu
            high_margin = (1.0 + d_union) * uu - energy
            margin4 = min(low_margin, high_margin)
            margins[4] = min(margins[4], margin4)
            if margin4 < -1e-9:
                violations.append((i, "lemma4", margin4))

        # selection inequality over every proper subset of the support
        if deltas[K] < 1.0:
            for size in range(0, K):
                for S in itertools.combinations(signal.support.tolist(), size):
                    check = verify_lemma1(A, signal, S, delta_k1=deltas[K])
                    lemma1_checks += 1
                    margin = check.lhs - check.rhs
                    margins[1] = min(margins[1], margin)
                    if margin < -1e-10:
                        violations.append((i, "lemma1", margin))
        else:
            lemma1_skipped += 1

        if violations:
            instance = generate_measurement(
                A, signal, NoiseSpec(kind="none", epsilon=0.0, seed=0)
            )
            directory = os.path.join(failure_dir, f"instance_{i}")
            save_problem_instance(directory, instance)
            raise GuaranteeViolation(
                f"lemma violations {violations}; instance serialized to "
                f"{directory}"
            )

    return LemmaSweepReport(
        instances=instances,
        lemma1_checks=lemma1_checks,
        lemma1_skipped=lemma1_skipped,
        min_margin_lemma1=margins[1],
        min_margin_lemma2=margins[2],
        min_margin_lemma3=margins[3],
        min_margin_lemma4=margins[4],
        violations=0,
    )
