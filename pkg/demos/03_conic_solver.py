"""
Second-order cone programs
==========================

Every convex subproblem is written with a small modeling layer (affine
expressions, second-order and rotated cones) and handed to a solver backend.
Two backends are available: an embedded primal-dual interior-point method and
Clarabel.
"""

import numpy as np

from gpecm import Model, conic

# %%
# Smallest enclosing circle of a few points: minimize r s.t. ||c - p_i|| <= r
pts = np.array([[0.0, 0.0], [4.0, 0.0], [1.0, 3.0], [2.0, 1.0]])
m = Model()
c = m.variable(2, "centre")
r = m.variable(1, "radius")
for p in pts:
    m.soc(r, c - p, "cover")
m.maximize(-r)
prog = m.build()
print(f"{prog.n} variables, {len(prog.cones)} cones, tags {prog.counts}")

for backend in conic.available_backends():
    sol = conic.solve(prog, backend=backend)
    rep = conic.validate_solution(prog, sol)
    x = sol.primal
    print(f"{backend:9s} status={sol.status} iters={sol.iterations:2d} centre={np.round(c.evaluate(x), 6)} "
          f"r={r.evaluate(x)[0]:.6f} primal residual={rep.primal:.1e}")

# %%
# Rotated cones give quadratic epigraphs: t >= |v|^2 is 2 * t * (1/2) >= |v|^2.
m = Model()
v = m.variable(2, "v")
t = m.variable(1, "t")
m.rsoc(t, 0.5, v, "square")
m.eq(v[0] + v[1] - 1.0, "line")
m.maximize(-t)
sol = conic.solve(m.build())
print("closest point of x + y = 1 to the origin:", np.round(v.evaluate(sol.primal), 6))

# %%
# Programs can be dumped for offline inspection
text = conic.dump_program(prog)
back = conic.load_program(text)
print(f"JSON dump: {len(text)} characters, reloads to {back.n} variables and {len(back.cones)} cones")
