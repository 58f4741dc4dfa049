"""The 3x3 worked example, end to end.

A diagonal matrix diag(sqrt(1+d), sqrt(1-d), sqrt(1+d)) has order-3 RIC
exactly d, which makes every quantity in the recovery analysis computable by
hand: the selection inequality evaluates to 1-d on the left and 1-sqrt(2)*d
on the right, and greedy selection recovers the 2-sparse signal (1, 1, 0) in
two iterations whenever d stays below 1/sqrt(3).
"""

import numpy as np

from omplab import (
    StopRule,
    check_theorem1_conditions,
    exact_ric,
    lemma1_example_instance,
    omp_run,
    sharp_ric_bound,
    verify_lemma1,
)

for delta in (0.1, 0.3, 0.5, 0.6):
    A, x, S = lemma1_example_instance(delta)
    report = exact_ric(A, 3)
    chk = verify_lemma1(A, x, S)
    verdict = check_theorem1_conditions(A, x, epsilon=0.0)
    result = omp_run(
        A, A @ x.to_dense(), StopRule.max_iterations(2), true_support=x.support
    )
    print(f"delta = {delta}")
    print(f"  exact RIC (order 3)      : {report.delta:.12f}")
    print(f"  selection lhs, rhs       : {chk.lhs:.6f}, {chk.rhs:.6f}"
          f"  (expected {1 - delta:.6f}, {1 - np.sqrt(2) * delta:.6f})")
    print(f"  RIC condition (< {sharp_ric_bound(2):.4f}) : {verdict.ric_ok}")
    print(f"  recovered support        : {result.recovered_support.tolist()}"
          f"  in {result.iterations} iterations")
    print(f"  estimate values          : {np.round(result.estimate.values, 12).tolist()}")
    print()
