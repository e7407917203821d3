"""Critical lengths of the KdV interval and critical ZK rectangles."""

import math

import zkrect as z

print("first KdV critical lengths:")
for length, k, l in z.kdv_critical_lengths(15.0):
    print(f"  {length:9.5f}  (k, l) = ({k}, {l})")

for L, B in ((4 * math.pi / math.sqrt(3), 2 * math.pi), (1.0, 1.0), (2 * math.pi, math.pi)):
    r = z.zk_is_critical(L, B)
    print(f"L = {L:.5f}, B = {B:.5f}: critical = {r.is_critical}, closest (k, l, n) = {r.best_triple}, residual = {r.residual:.2e}")
