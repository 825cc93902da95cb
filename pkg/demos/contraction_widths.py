"""How contraction cost scales with circuit shape.

Memory for exact contraction is 2^width, where the width is the largest
tensor rank materialized along the elimination order. For brickwork trace
networks the width tracks the depth and stays roughly flat in the qubit
count, which is what makes shallow wide circuits cheap to trace.
"""
import numpy as np

from framepot.circuit import EnsembleSpec, Family, build_instance, build_trace_circuit
from framepot.tensornet import build_network, estimate_cost, order_indices

rng = np.random.default_rng(0)

print("trace-network width and flop estimate (parallel brickwork, min-fill):")
print(f"{'n':>4} " + " ".join(f"l={l:<13d}" for l in range(2, 8)))
for n in (4, 8, 12, 16):
    cells = []
    for l in range(2, 8):
        spec = EnsembleSpec(Family.PARALLEL, n=n, l=l)
        u = build_instance(spec, rng)
        v = build_instance(spec, rng)
        net = build_network(build_trace_circuit(u, v))
        order = order_indices(net)
        _, flops = estimate_cost(net, order)
        cells.append(f"w={order.width:<2d} {flops:8.2e}")
    print(f"{n:>4} " + " ".join(cells))

print("\nmin-fill vs min-degree on one deep instance:")
spec = EnsembleSpec(Family.PARALLEL, n=10, l=8)
c = build_instance(spec, rng)
net = build_network(c, 0, 0)
for heuristic in ("min-fill", "min-degree"):
    order = order_indices(net, heuristic)
    _, flops = estimate_cost(net, order)
    print(f"  {heuristic:10s}: width {order.width:2d}, ~{flops:.2e} flops")
