"""KL coverings of the simplex and of a channel's output marginals.

Run:  python demos/02_covering_nets.py
"""
import math

from permchan import covering

print("Scalar grid for eps = 1/50:", [round(float(v), 3) for v in covering.scalar_net(1 / 50).points])

print("\nSimplex nets (gamma = 18), certified on the lattice with m = 300:")
print("  k   eps    centers   radius     radius/eps")
for k in (2, 3, 4):
    for eps in (1.0, 0.25, 0.05):
        net = covering.simplex_net(k, eps)
        r = covering.covering_radius(net, 300)
        print(f"  {k}  {eps:<5}  {len(net):8d}   {r:.5f}    {r / eps:.3f}")

print("\nTwo-symbol net sizes against the 7/sqrt(eps) ceiling:")
for eps in (1.0, 0.1, 0.01, 0.001):
    print(f"  eps={eps:<6} |net|={len(covering.simplex_net(2, eps)):4d}  ceiling={7 / math.sqrt(eps):7.1f}")

P = [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.4, 0.4, 0.2]]
net = covering.subspace_net(P, 0.25)
print(f"\nRank-{net.rank} channel with 3 inputs: {len(net)} centers, bound {net.count_bound()}")

ch = [[0.8, 0.2], [0.3, 0.7]]
print("\nNets of radius 1/n for a 2x2 channel (log size grows like (1/2) ln n):")
for n in (10, 100, 1000, 10000):
    print(f"  n={n:<6} |net|={len(covering.net_for_n(ch, n))}")
print(f"fitted slope: {covering.log_size_slope(ch, [10, 100, 1000, 10000]):.3f}")
