"""The sharp recovery condition against the strongest prior condition.

Prints both RIC thresholds over a range of sparsities (ours is always the
larger, i.e. weaker requirement) and both minimum-magnitude floors over a
sweep of RIC values (ours is never larger, strictly smaller once the RIC is
positive, with equality exactly at zero).
"""

import numpy as np

from omplab import chang_wu_ric_bound, comparison_report, sharp_ric_bound

print(f"{'K':>4} {'prior RIC bound':>16} {'sharp RIC bound':>16} {'gap':>10}")
for K in (1, 2, 3, 5, 8, 13, 21, 34, 55):
    cw = chang_wu_ric_bound(K)
    ours = sharp_ric_bound(K)
    print(f"{K:>4} {cw:>16.6f} {ours:>16.6f} {ours - cw:>10.6f}")

print()
K, eps = 4, 1.0
print(f"minimum-magnitude floors at K = {K}, eps = {eps}:")
print(f"{'delta':>8} {'prior floor':>14} {'our floor':>12} {'strictly weaker':>16}")
for delta in np.linspace(0.0, sharp_ric_bound(K), 8)[:-1]:
    rep = comparison_report(K, float(delta), eps)
    prior = (f"{rep.chang_wu_min_mag:.4f}" if rep.chang_wu_min_mag_defined
             else "undefined")
    print(f"{delta:>8.4f} {prior:>14} {rep.sharp_min_mag:>12.4f} "
          f"{str(rep.min_mag_strictly_weaker):>16}")
