"""Integer-order Lagrange geometry with sympy, lambdified to numpy.

An implementation independent of the Caputo machinery, used as the reference
for every object of the pipeline at alpha = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List

import numpy as np
import sympy as sp

from ..models.fields import Lattice, PowerField
from ..models.geometry import Lagrangian


def _exponent(e: float):
    return int(e) if float(e).is_integer() else sp.nsimplify(e)


def to_sympy(field: PowerField, coords: List[sp.Symbol]) -> sp.Expr:
    terminals = field.chart.terminals
    expr = sp.Integer(0)
    for exps, coeff in field.terms:
        term = sp.Float(coeff) if not float(coeff).is_integer() else sp.Integer(int(coeff))
        for u, t, e in zip(coords, terminals, exps):
            if e != 0.0:
                term *= (u - t if t else u) ** _exponent(e)
        expr += term
    return expr


@dataclass
class ClassicalGeometry:
    coords: List[sp.Symbol]
    g: sp.Matrix
    G: List[sp.Expr]
    N: List[List[sp.Expr]]
    Lhat: List[List[List[sp.Expr]]]
    Chat: List[List[List[sp.Expr]]]
    Omega: List[List[List[sp.Expr]]]
    torsion_h: List[Dict[tuple, sp.Expr]]
    torsion_v: List[Dict[tuple, sp.Expr]]
    omega: List[sp.Expr]
    theta: Dict[tuple, sp.Expr]

    @property
    def n(self) -> int:
        return self.g.shape[0]

    def sample(self, expr: sp.Expr, lattice: Lattice) -> np.ndarray:
        fn = sp.lambdify(self.coords, expr, "numpy")
        args = [lattice.coordinate(k) for k in range(len(self.coords))]
        return np.broadcast_to(np.asarray(fn(*args), dtype=float), lattice.shape).copy()

    def arrays(self, lattice: Lattice) -> Dict[str, np.ndarray]:
        """Every object sampled on a lattice, in the engine's array layout."""
        n, dim, shape = self.n, 2 * self.n, lattice.shape
        s = lambda e: self.sample(e, lattice)  # noqa: E731
        out = {
            "g": np.stack([np.stack([s(self.g[i, j]) for j in range(n)], -1) for i in range(n)], -2),
            "G": np.stack([s(e) for e in self.G], -1),
            "N": np.stack([np.stack([s(e) for e in row], -1) for row in self.N], -2),
            "omega": np.stack([s(e) for e in self.omega], -1),
        }
        for name in ("Lhat", "Chat", "Omega"):
            table = getattr(self, name)
            out[name] = np.stack(
                [np.stack([np.stack([s(e) for e in r], -1) for r in plane], -2) for plane in table], -3
            )
        theta = np.zeros(shape + (dim, dim))
        for (a, b), e in self.theta.items():
            theta[..., a, b] = s(e)
            theta[..., b, a] = -theta[..., a, b]
        out["theta"] = theta
        for name, forms in (("torsion_h", self.torsion_h), ("torsion_v", self.torsion_v)):
            arr = np.zeros(shape + (n, dim, dim))
            for i, comps in enumerate(forms):
                for (a, b), e in comps.items():
                    arr[..., i, a, b] = s(e)
                    arr[..., i, b, a] = -arr[..., i, a, b]
            out[name] = arr
        return out


def classical_geometry(lag: Lagrangian) -> ClassicalGeometry:
    chart = lag.chart
    n = chart.n
    xs = list(sp.symbols(f"x1:{n + 1}", real=True))
    ys = list(sp.symbols(f"y1:{n + 1}", real=True))
    coords = xs + ys
    L = to_sympy(lag.L, coords)

    g = sp.Matrix(n, n, lambda i, j: sp.Rational(1, 2) * sp.diff(L, ys[i], ys[j]))
    g_inv = g.inv()
    G = [
        sp.cancel(
            sp.Rational(1, 4)
            * sum(
                g_inv[k, j] * (sum(ys[i] * sp.diff(L, xs[i], ys[j]) for i in range(n)) - sp.diff(L, xs[j]))
                for j in range(n)
            )
        )
        for k in range(n)
    ]
    N = [[sp.cancel(sp.diff(G[a], ys[j])) for j in range(n)] for a in range(n)]

    def delta(f: sp.Expr, k: int) -> sp.Expr:
        return sp.diff(f, xs[k]) - sum(N[a][k] * sp.diff(f, ys[a]) for a in range(n))

    def christoffel(deriv) -> List[List[List[sp.Expr]]]:
        return [
            [
                [
                    sp.Rational(1, 2)
                    * sum(
                        g_inv[i, r] * (deriv(g[j, r], k) + deriv(g[k, r], j) - deriv(g[j, k], r))
                        for r in range(n)
                    )
                    for k in range(n)
                ]
                for j in range(n)
            ]
            for i in range(n)
        ]

    Lhat = christoffel(delta)
    Chat = christoffel(lambda f, k: sp.diff(f, ys[k]))
    Omega = [
        [[delta(N[a][j], i) - delta(N[a][i], j) for j in range(n)] for i in range(n)] for a in range(n)
    ]
    torsion_h = [{(j, n + c): Chat[i][j][c] for j in range(n) for c in range(n)} for i in range(n)]
    torsion_v = []
    for a in range(n):
        comps = {(i, j): -Omega[a][i][j] for i in range(n) for j in range(i + 1, n)}
        comps.update(
            {(i, n + b): sp.diff(N[a][i], ys[b]) - Lhat[a][b][i] for i in range(n) for b in range(n)}
        )
        torsion_v.append(comps)
    omega = [sp.Rational(1, 2) * sp.diff(L, ys[i]) for i in range(n)]
    theta = {(j, n + i): -g[i, j] for i in range(n) for j in range(n)}
    return ClassicalGeometry(coords, g, G, N, Lhat, Chat, Omega, torsion_h, torsion_v, omega, theta)
