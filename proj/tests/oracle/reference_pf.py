#!/usr/bin/env python3
"""Independent Newton-Raphson power-flow reference used to generate and check
test fixtures. Parses MATPOWER .m case text directly; no project code involved.

Usage:
  reference_pf.py solve <case.m> [lambda]     print solved bus voltages (JSON)
  reference_pf.py check <case.m>              compare against Vm/Va columns
  reference_pf.py nose <case.m> [lo hi]       bisect the max loading factor
"""
import json
import re
import sys

import numpy as np


def parse_matrix(text, name):
    m = re.search(r"mpc\.%s\s*=\s*\[(.*?)\];" % name, text, re.S)
    rows = []
    for line in m.group(1).splitlines():
        line = line.split("%")[0].strip().rstrip(";")
        if line:
            rows.append([float(tok) for tok in line.split()])
    return np.array(rows)


def load_case(path):
    text = open(path).read()
    base = float(re.search(r"mpc\.baseMVA\s*=\s*([\d.]+)", text).group(1))
    return base, parse_matrix(text, "bus"), parse_matrix(text, "gen"), parse_matrix(text, "branch")


def build(base, bus, gen, branch, lam=1.0):
    n = len(bus)
    ids = {int(b[0]): i for i, b in enumerate(bus)}
    Y = np.zeros((n, n), complex)
    for br in branch:
        if br[10] == 0:
            continue
        f, t = ids[int(br[0])], ids[int(br[1])]
        y = 1.0 / complex(br[2], br[3])
        bc = 1j * br[4] / 2
        tap = br[8] if br[8] != 0 else 1.0
        tap = tap * np.exp(1j * np.deg2rad(br[9]))
        Y[f, f] += (y + bc) / (tap * np.conj(tap))
        Y[f, t] += -y / np.conj(tap)
        Y[t, f] += -y / tap
        Y[t, t] += y + bc
    for i, b in enumerate(bus):
        Y[i, i] += complex(b[4], b[5]) / base
    S = np.array([-complex(b[2], b[3]) / base for b in bus])
    vset = np.full(n, np.nan)
    kind = np.array([int(b[1]) for b in bus])  # 1 PQ, 2 PV, 3 slack
    on_gen = np.zeros(n, bool)
    for g in gen:
        i = ids[int(g[0])]
        if g[7] > 0:
            S[i] += complex(g[1], g[2]) / base
            on_gen[i] = True
            vset[i] = g[5]
    kind[(kind == 2) & ~on_gen] = 1
    S = S * lam
    slack = np.where(kind == 3)[0][0]
    slack_ang = np.deg2rad(bus[slack, 8])
    return Y, S, kind, vset, slack_ang, ids


def newton(Y, S, kind, vset, slack_ang=0.0, tol=1e-10, maxit=50, V0=None):
    n = len(S)
    slack = np.where(kind == 3)[0][0]
    pv = np.where(kind == 2)[0]
    pq = np.where(kind == 1)[0]
    V = np.exp(1j * slack_ang) * np.ones(n, complex) if V0 is None else V0.copy()
    if V0 is None:
        V[slack] = vset[slack] * np.exp(1j * slack_ang)
        V[pv] = vset[pv] * np.exp(1j * slack_ang)
    nonslack = np.r_[pv, pq]
    for it in range(maxit):
        I = Y @ V
        mis = V * np.conj(I) - S
        f = np.r_[mis[nonslack].real, mis[pq].imag]
        if np.max(np.abs(f)) < tol:
            return V, True, it
        dSdVa = 1j * np.diag(V) @ (np.diag(np.conj(I)) - np.conj(Y) @ np.diag(np.conj(V)))
        dSdVm = np.diag(V / np.abs(V)) @ np.diag(np.conj(I)) + np.diag(V) @ np.conj(Y) @ np.diag(np.conj(V / np.abs(V)))
        J11 = dSdVa[np.ix_(nonslack, nonslack)].real
        J12 = dSdVm[np.ix_(nonslack, pq)].real
        J21 = dSdVa[np.ix_(pq, nonslack)].imag
        J22 = dSdVm[np.ix_(pq, pq)].imag
        J = np.block([[J11, J12], [J21, J22]])
        try:
            dx = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            return V, False, it
        na = len(nonslack)
        Va = np.angle(V)
        Vm = np.abs(V)
        Va[nonslack] -= dx[:na]
        Vm[pq] -= dx[na:]
        V = Vm * np.exp(1j * Va)
    return V, False, maxit


def main():
    cmd, path = sys.argv[1], sys.argv[2]
    base, bus, gen, branch = load_case(path)
    if cmd == "solve":
        lam = float(sys.argv[3]) if len(sys.argv) > 3 else 1.0
        Y, S, kind, vset, sa, _ = build(base, bus, gen, branch, lam)
        V, ok, it = newton(Y, S, kind, vset, sa)
        out = {
            "converged": bool(ok),
            "iterations": it,
            "buses": [
                {"id": int(b[0]), "vm": abs(V[i]), "va_deg": float(np.rad2deg(np.angle(V[i])))}
                for i, b in enumerate(bus)
            ],
        }
        print(json.dumps(out, indent=1))
    elif cmd == "check":
        Y, S, kind, vset, sa, _ = build(base, bus, gen, branch)
        V, ok, it = newton(Y, S, kind, vset, sa)
        dv = np.abs(np.abs(V) - bus[:, 7])
        da = np.abs(np.rad2deg(np.angle(V)) - bus[:, 8])
        print("converged", ok, "iters", it)
        print("max |Vm - file|", dv.max(), "at bus", int(bus[np.argmax(dv), 0]))
        print("max |Va - file| deg", da.max(), "at bus", int(bus[np.argmax(da), 0]))
    elif cmd == "nose":
        lo = float(sys.argv[3]) if len(sys.argv) > 3 else 1.0
        hi = float(sys.argv[4]) if len(sys.argv) > 4 else 5.0
        Y, S, kind, vset, sa, _ = build(base, bus, gen, branch, lo)
        V, ok, _ = newton(Y, S, kind, vset, sa)
        assert ok
        while hi - lo > 1e-3:
            mid = 0.5 * (lo + hi)
            Ym, Sm, km, vm, sa, _ = build(base, bus, gen, branch, mid)
            Vm_, okm, _ = newton(Ym, Sm, km, vm, sa, V0=V)
            if okm:
                lo, V = mid, Vm_
            else:
                hi = mid
        print("nose lambda ~", 0.5 * (lo + hi))


if __name__ == "__main__":
    main()
