"""The closed-form bounds next to exact values at small n.

Run:  python demos/04_bounds_tour.py
"""
import math
from fractions import Fraction

from permchan import bounds, covering, exact
from permchan.core import iter_ntypes, multinomial_prob_exact

print(f"calibrated alpha = {bounds.PETROV_ALPHA:.6f} (1/sqrt(pi) = {1 / math.sqrt(math.pi):.6f})")

print("\n-ln P[type = t] under iid draws from t/n, against its Stirling-type bound:")
for t in [(1, 1), (4, 4), (2, 3, 5), (1, 1, 1, 11)]:
    n = sum(t)
    ex = -math.log(multinomial_prob_exact(t, [Fraction(c, n) for c in t]))
    print(f"  t={t}: exact {ex:.4f}  bound {bounds.prob_a_stirling_bound(t):.4f}  "
          f"single-remainder form {bounds.prob_a_stirling_bound(t, 'single'):.4f}")
print("The single 1/(12n) remainder falls below the exact value; the per-count one does not.")

P = [[0.9, 0.1], [0.1, 0.9]]
n, pi = 12, (6, 6)
c = exact.gap_term(pi, P)
print(f"\nFirst m of n={n} outputs, BSC(0.1), balanced input (measured c = {c:.4f}):")
print("   m   exact     (m/n)c    Stam      large-m")
for m in (1, 3, 6, 9, 11, 12):
    st = bounds.stam_bounds(2, n, m, c)
    d = exact.marginal_divergence(pi, P, None, m)
    lm = f"{st.large_m:.4f}" if st.large_m is not None else "   -  "
    print(f"  {m:2d}   {d:.4f}    {st.han:.4f}    {st.stam:.4f}    {lm}")

print("\nMutual information with a uniform prior on input types, against ln|net| + c + 1:")
for n in (2, 4, 6, 8):
    c = max(exact.gap_term(p, P) for p in iter_ntypes(n, 2))
    ub = bounds.mi_upper_bound(P, n, len(covering.net_for_n(P, n)), c)
    print(f"  n={n}: I = {exact.mutual_information_exact(P, n):.4f}  bound = {ub.value:.4f}")

print(f"\nGap constant from the concentration route: {bounds.gap_constant_bound(P):.4f} nats "
      f"(largest measured gap up to n=12: {max(r.gap for r in exact.gap_profile(P, range(2, 13, 2))):.4f})")
