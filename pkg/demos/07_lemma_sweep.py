"""Randomized verification of the four supporting inequalities.

Runs the lemma sweep over a mix of Gaussian designs (taller matrices for the
higher sparsities, where an exact RIC below 1 is actually attainable) and
the diagonal worked-example family, reporting the smallest margin seen for
each inequality. Margins must never go negative beyond tolerance; a
violation would serialize the instance and abort.
"""

from omplab import lemma_sweep

report = lemma_sweep(seed=424242, instances=200)
print(f"instances checked          : {report.instances}")
print(f"selection-inequality checks: {report.lemma1_checks} "
      f"(skipped {report.lemma1_skipped} with RIC >= 1 at order K+1)")
print(f"min margin, selection      : {report.min_margin_lemma1:.6e}")
print(f"min margin, monotonicity   : {report.min_margin_lemma2:.6e}")
print(f"min margin, correlation    : {report.min_margin_lemma3:.6e}")
print(f"min margin, projection     : {report.min_margin_lemma4:.6e}")
print(f"violations                 : {report.violations}")
