#!/usr/bin/env python3
"""Reference conic backend: solves a dumped standard-form problem with cvxpy.

Usage: reference_backend.py <input.json> <output.json>

Input is the exchange format produced by dump_standard_form():
    min c'x  s.t.  A x = b,  G x + s = h,  s in R+^num_lin x SOC(q1) x ...
Output carries primal x and duals (y for equalities, z stacked over the
linear rows and cone blocks) in the same internal convention the native
backend uses, so results are directly comparable.
"""

import json
import sys

import numpy as np
import cvxpy as cp
import scipy.sparse as sp


def to_sparse(triplets, rows, cols):
    if not triplets:
        return sp.csr_matrix((rows, cols))
    i, j, v = zip(*[(int(t[0]), int(t[1]), float(t[2])) for t in triplets])
    return sp.csr_matrix((v, (i, j)), shape=(rows, cols))


def main():
    with open(sys.argv[1]) as f:
        prob = json.load(f)

    n = prob["num_vars"]
    num_eq = prob["num_eq"]
    num_lin = prob["num_lin"]
    soc_dims = prob["soc_dims"]
    c = np.array(prob["c"])
    b = np.array(prob["b"])
    h = np.array(prob["h"])
    m = num_lin + sum(soc_dims)
    A = to_sparse(prob["A"], num_eq, n)
    G = to_sparse(prob["G"], m, n)

    x = cp.Variable(n)
    constraints = []
    eq_con = None
    if num_eq > 0:
        eq_con = A @ x == b
        constraints.append(eq_con)
    lin_con = None
    if num_lin > 0:
        lin_con = G[:num_lin] @ x <= h[:num_lin]
        constraints.append(lin_con)
    soc_cons = []
    at = num_lin
    for q in soc_dims:
        head = h[at] - G[at] @ x
        tail = h[at + 1 : at + q] - G[at + 1 : at + q] @ x
        con = cp.SOC(head, tail)
        soc_cons.append(con)
        constraints.append(con)
        at += q

    problem = cp.Problem(cp.Minimize(c @ x), constraints)
    problem.solve(solver=cp.CLARABEL)

    out = {"status": "numerical-failure"}
    if problem.status == cp.OPTIMAL:
        y = eq_con.dual_value if eq_con is not None else np.zeros(0)
        z = np.zeros(m)
        if lin_con is not None:
            z[:num_lin] = lin_con.dual_value
        at = num_lin
        for q, con in zip(soc_dims, soc_cons):
            dv = con.dual_value
            if isinstance(dv, (list, tuple)):
                z[at] = float(np.asarray(dv[0]).reshape(-1)[0])
                z[at + 1 : at + q] = np.asarray(dv[1]).reshape(-1)
            else:
                z[at : at + q] = np.asarray(dv).reshape(-1)
            at += q
        out = {
            "status": "optimal",
            "objective": float(problem.value),
            "x": list(map(float, x.value)),
            "y": list(map(float, np.atleast_1d(y))),
            "z": list(map(float, z)),
            "iterations": int(problem.solver_stats.num_iters or 0),
            "relgap": 0.0,
        }
    elif problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        out = {"status": "infeasible"}
    elif problem.status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        out = {"status": "unbounded"}

    with open(sys.argv[2], "w") as f:
        json.dump(out, f)


if __name__ == "__main__":
    main()
