#!/usr/bin/env python3
"""Independent recomputation of the twelve audit outputs for the quickstart pair.

Writes data/quickstart/{reference,evaluated}.json (with --make-grids) and
data/quickstart/expected_gamma.json, the golden output of

    gamma-audit gamma data/quickstart/reference.json data/quickstart/evaluated.json

Plain Python, no dependencies. The arithmetic follows the documented metric
definitions step by step so the golden file is byte-comparable with the tool.
"""

import argparse
import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
QUICKSTART = ROOT / "data" / "quickstart"

CRITERIA = [(5.0, 2.0), (3.0, 2.0), (2.0, 2.0), (5.0, 1.0)]
SEARCH_RADIUS_FACTOR = 3.0
STEP_FACTOR = 10.0
LATTICE_DIST_MM = 1.0
CUTOFF_PCT = 10.0
PASS_TOLERANCE = 1e-9
INDEX_SNAP = 1e-10
INDEX_SLACK = 1e-9


class Grid:
    def __init__(self, doc):
        self.nx, self.ny = doc["nx"], doc["ny"]
        self.dx, self.dy = float(doc["dx_mm"]), float(doc["dy_mm"])
        self.ox, self.oy = (float(v) for v in doc["origin_mm"])
        self.v = [float(x) for x in doc["values"]]

    def at(self, i, j):
        return self.v[j * self.nx + i]


def round_half_away(f):
    return math.copysign(math.floor(abs(f) + 0.5), f)


def locate(f, n):
    last = float(n - 1)
    if not math.isfinite(f) or f < -INDEX_SLACK or f > last + INDEX_SLACK:
        return None
    nearest = round_half_away(f)
    if abs(f - nearest) <= INDEX_SNAP:
        f = nearest
    f = min(max(f, 0.0), last)
    base = min(math.floor(f), last - 1.0)
    return int(base), f - base


def bilinear(g, fi, fj):
    lx = locate(fi, g.nx)
    ly = locate(fj, g.ny)
    if lx is None or ly is None:
        return None
    (i0, tx), (j0, ty) = lx, ly
    low = (1.0 - tx) * g.at(i0, j0) + tx * g.at(i0 + 1, j0)
    high = (1.0 - tx) * g.at(i0, j0 + 1) + tx * g.at(i0 + 1, j0 + 1)
    return (1.0 - ty) * low + ty * high


def candidates(dist_mm):
    step = LATTICE_DIST_MM / STEP_FACTOR
    reach = SEARCH_RADIUS_FACTOR * STEP_FACTOR * (dist_mm / LATTICE_DIST_MM)
    reach_sq = reach * reach * (1.0 + 1e-12)
    n = int(math.floor(reach + 1e-9))
    out = []
    for b in range(-n, n + 1):
        for a in range(-n, n + 1):
            if float(a * a + b * b) > reach_sq:
                continue
            ox, oy = a * step, b * step
            out.append((a, b, ox, oy, (ox * ox + oy * oy) / (dist_mm * dist_mm)))
    out.sort(key=lambda o: o[0] * o[0] + o[1] * o[1])  # stable
    return step, n, out


def frame(ref, ev, cutoff_pct):
    """Evaluated nodes (whole grid) with the reference dose at each position."""
    sx, sy = ev.dx / ref.dx, ev.dy / ref.dy
    offx, offy = (ev.ox - ref.ox) / ref.dx, (ev.oy - ref.oy) / ref.dy
    rows = []
    for j in range(ev.ny):
        for i in range(ev.nx):
            fi, fj = offx + i * sx, offy + j * sy
            dr = bilinear(ref, fi, fj)
            if dr is not None:
                rows.append((i, j, fi, fj, dr, ev.at(i, j)))
    norm = max(r[4] for r in rows)
    if cutoff_pct > 0.0:
        threshold = cutoff_pct / 100.0 * norm
        rows = [r for r in rows if not r[4] < threshold]
    return rows, norm


def median(values):
    s = sorted(values)
    n = len(s)
    return s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2.0


def gamma_values(ref, ev, dose_pct, dist_mm):
    _, _, cands = candidates(dist_mm)
    rows, norm = frame(ref, ev, CUTOFF_PCT)
    tol = dose_pct / 100.0 * norm
    out = []
    for _, _, fi, fj, _, de in rows:
        best = math.inf
        for _, _, ox, oy, dist_term in cands:
            if dist_term >= best:
                break
            dr = bilinear(ref, fi + ox / ref.dx, fj + oy / ref.dy)
            if dr is None:
                continue
            ratio = (dr - de) / tol
            best = min(best, dist_term + ratio * ratio)
        out.append(math.sqrt(best))
    return out


def dta(ref, ev, dist_mm=2.0):
    step, reach, cands = candidates(dist_mm)
    radius_mm = SEARCH_RADIUS_FACTOR * dist_mm
    slot = {(o[0], o[1]): q for q, o in enumerate(cands)}
    radius = [math.sqrt(o[2] * o[2] + o[3] * o[3]) for o in cands]
    rows, norm = frame(ref, ev, CUTOFF_PCT)
    tol = 1e-6 * norm
    per_node = []
    for _, _, fi, fj, _, de in rows:
        cache = {}

        def mismatch(q):
            if q not in cache:
                o = cands[q]
                dr = bilinear(ref, fi + o[2] / ref.dx, fj + o[3] / ref.dy)
                cache[q] = math.nan if dr is None else dr - de
            return cache[q]

        best = math.inf
        for q, o in enumerate(cands):
            if radius[q] - step >= best:
                break
            s0 = mismatch(q)
            if math.isnan(s0):
                continue
            if abs(s0) <= tol:
                best = min(best, radius[q])
                continue
            for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                q1 = slot.get((o[0] + da, o[1] + db))
                if q1 is None:
                    continue
                s1 = mismatch(q1)
                if math.isnan(s1) or not ((s0 < 0.0 and s1 > 0.0) or (s0 > 0.0 and s1 < 0.0)):
                    continue
                n1 = cands[q1]
                t = s0 / (s0 - s1)
                px = o[2] + t * (n1[2] - o[2])
                py = o[3] + t * (n1[3] - o[3])
                best = min(best, math.sqrt(px * px + py * py))
        per_node.append(min(best, radius_mm))
    return median(per_node)


def outputs(ref, ev):
    result = {}
    gprs, medians = [], []
    for dose_pct, dist_mm in CRITERIA:
        g = gamma_values(ref, ev, dose_pct, dist_mm)
        passed = sum(1 for v in g if v <= 1.0 + PASS_TOLERANCE)
        gprs.append(100.0 * passed / len(g))
        medians.append(median(g))
    for k in range(4):
        result[f"gpr_gic{k + 1}"] = gprs[k]
    for k in range(4):
        result[f"median_gamma_gic{k + 1}"] = medians[k]

    rows, norm = frame(ref, ev, 0.0)
    diffs = [(de - dr) * 100.0 / norm for _, _, _, _, dr, de in rows]
    total = 0.0
    for d in diffs:
        total += d
    result["mean_dd_pct"] = total / len(diffs)
    result["median_dd_pct"] = median(diffs)
    result["dta_mm"] = dta(ref, ev)

    mass_r = mass_e = ri = rj = ei = ej = 0.0
    for i, j, _, _, dr, de in rows:
        mass_r += dr
        ri += dr * i
        rj += dr * j
        mass_e += de
        ei += de * i
        ej += de * j
    cx = (ei / mass_e - ri / mass_r) * ev.dx
    cy = (ej / mass_e - rj / mass_r) * ev.dy
    result["com_mm"] = math.sqrt(cx * cx + cy * cy)
    return result


def make_grids():
    n, d, origin = 24, 1.0, -11.5
    rng = random.Random(2024)

    def blob(peak, sigma, cx, cy, noise):
        values = []
        for j in range(n):
            for i in range(n):
                x, y = origin + i * d, origin + j * d
                dose = 0.2 + peak * math.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma * sigma))
                if noise:
                    dose *= 1.0 + noise * (2.0 * rng.random() - 1.0)
                values.append(dose)
        return values

    def doc(values):
        return {"format": "dgrid", "version": 1, "nx": n, "ny": n, "dx_mm": d, "dy_mm": d,
                "origin_mm": [origin, origin], "unit": "Gy", "values": values}

    QUICKSTART.mkdir(parents=True, exist_ok=True)
    (QUICKSTART / "reference.json").write_text(json.dumps(doc(blob(8.0, 4.5, 0.0, 0.0, 0.0))) + "\n")
    (QUICKSTART / "evaluated.json").write_text(json.dumps(doc(blob(8.2, 4.6, 0.7, -0.4, 0.015))) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--make-grids", action="store_true", help="regenerate the input pair first")
    args = ap.parse_args()
    if args.make_grids:
        make_grids()
    ref = Grid(json.loads((QUICKSTART / "reference.json").read_text()))
    ev = Grid(json.loads((QUICKSTART / "evaluated.json").read_text()))
    (QUICKSTART / "expected_gamma.json").write_text(json.dumps(outputs(ref, ev), indent=2) + "\n")


if __name__ == "__main__":
    main()
