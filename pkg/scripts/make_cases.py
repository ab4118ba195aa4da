"""Regenerate the bundled case documents under src/reservezones/data/.

RTS-24 line/bus data follow the public IEEE RTS-24 tables; generator cost and
reserve offers follow the widely used single-period market variant of that
system. Items the public tables do not pin down (which lines are
de-rated, where the wind farms sit besides buses 3 and 5) are assumptions and
are listed in each document's "notes" field.
"""
from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "reservezones" / "data"


def gen(i, bus, pmin, pmax, c, cu, cd, ru, rd):
    span = pmax - pmin
    ru, rd = min(ru, span), min(rd, span)
    if ru + rd > span:
        # offers must fit side by side in the operating range
        scale = span / (ru + rd)
        ru, rd = round(ru * scale, 6), round(rd * scale, 6)
    return {"id": i, "bus": bus, "p_min": pmin, "p_max": pmax, "c": c, "c_up": cu,
            "c_dn": cd, "r_up_max": ru, "r_dn_max": rd}


def line(i, f, t, x, rating):
    return {"id": i, "from": f, "to": t, "reactance": x, "rating": rating}


def ring4():
    # plain ring: l1=(1,2), l2=(2,3), l3=(3,4), l4=(4,1)
    return {
        "name": "ring4",
        "notes": "4-bus ring used for partition examples; market data are synthetic.",
        "buses": [{"id": 1, "load": 0.0}, {"id": 2, "load": 50.0},
                  {"id": 3, "load": 0.0}, {"id": 4, "load": 100.0}],
        "lines": [line(1, 1, 2, 0.1, 100.0), line(2, 2, 3, 0.1, 100.0),
                  line(3, 3, 4, 0.1, 60.0), line(4, 4, 1, 0.1, 60.0)],
        "generators": [gen(1, 1, 0.0, 150.0, 10.0, 4.0, 3.0, 50.0, 50.0),
                       gen(2, 3, 0.0, 120.0, 20.0, 2.0, 2.0, 40.0, 40.0),
                       gen(3, 4, 0.0, 40.0, 35.0, 1.0, 1.0, 20.0, 20.0)],
        "wind": [{"id": 1, "bus": 2, "capacity": 80.0, "forecast": 40.0},
                 {"id": 2, "bus": 4, "capacity": 60.0, "forecast": 30.0}],
        "penalties": {"curtail": 60.0, "shed": 400.0},
        "slack": 1,
    }


def congested4():
    # cheap flexible area {1,2} behind a single tie (2,3) to a wind/load area {3,4}
    return {
        "name": "congested4",
        "notes": "Tie line 2-3 binds at day-ahead; cheap reserves are stranded behind it.",
        "buses": [{"id": 1, "load": 0.0}, {"id": 2, "load": 0.0},
                  {"id": 3, "load": 0.0}, {"id": 4, "load": 150.0}],
        "lines": [line(1, 1, 2, 0.05, 300.0), line(2, 2, 3, 0.1, 100.0),
                  line(3, 3, 4, 0.05, 300.0)],
        "generators": [gen(1, 1, 0.0, 300.0, 10.0, 2.0, 2.0, 100.0, 100.0),
                       gen(2, 4, 0.0, 200.0, 30.0, 5.0, 5.0, 10.0, 10.0)],
        "wind": [{"id": 1, "bus": 3, "capacity": 100.0, "forecast": 50.0}],
        "penalties": {"curtail": 60.0, "shed": 500.0},
        "slack": 1,
    }


def mesh6():
    return {
        "name": "mesh6",
        "notes": "Two 3-bus triangles joined by two ties; synthetic market data.",
        "buses": [{"id": 1, "load": 20.0}, {"id": 2, "load": 40.0}, {"id": 3, "load": 30.0},
                  {"id": 4, "load": 90.0}, {"id": 5, "load": 20.0}, {"id": 6, "load": 70.0}],
        "lines": [line(1, 1, 2, 0.08, 120.0), line(2, 2, 3, 0.08, 120.0),
                  line(3, 1, 3, 0.10, 120.0), line(4, 3, 4, 0.12, 70.0),
                  line(5, 2, 5, 0.15, 50.0), line(6, 4, 5, 0.08, 120.0),
                  line(7, 5, 6, 0.08, 120.0), line(8, 4, 6, 0.10, 120.0)],
        "generators": [gen(1, 1, 0.0, 200.0, 12.0, 3.0, 2.0, 60.0, 60.0),
                       gen(2, 2, 0.0, 80.0, 18.0, 2.0, 2.0, 30.0, 30.0),
                       gen(3, 5, 0.0, 150.0, 28.0, 6.0, 5.0, 50.0, 50.0),
                       gen(4, 6, 0.0, 60.0, 40.0, 1.5, 1.5, 30.0, 30.0)],
        "wind": [{"id": 1, "bus": 3, "capacity": 100.0, "forecast": 50.0},
                 {"id": 2, "bus": 4, "capacity": 80.0, "forecast": 40.0}],
        "penalties": {"curtail": 70.0, "shed": 500.0},
        "slack": 1,
    }


def house5():
    # ring 1-2-3-4-5 with a chord 2-5; wind sits on the far side of the chord
    return {
        "name": "house5",
        "notes": "5-bus ring with one chord; synthetic market data.",
        "buses": [{"id": i, "load": ld} for i, ld in
                  enumerate([0.0, 30.0, 60.0, 50.0, 20.0], start=1)],
        "lines": [line(1, 1, 2, 0.08, 120.0), line(2, 2, 3, 0.10, 70.0),
                  line(3, 3, 4, 0.10, 80.0), line(4, 4, 5, 0.10, 70.0),
                  line(5, 5, 1, 0.08, 120.0), line(6, 2, 5, 0.12, 60.0)],
        "generators": [gen(1, 1, 0.0, 140.0, 12.0, 3.0, 2.0, 45.0, 45.0),
                       gen(2, 3, 0.0, 60.0, 26.0, 5.0, 4.0, 25.0, 25.0),
                       gen(3, 5, 0.0, 50.0, 34.0, 1.5, 1.5, 20.0, 20.0)],
        "wind": [{"id": 1, "bus": 4, "capacity": 70.0, "forecast": 35.0}],
        "penalties": {"curtail": 65.0, "shed": 450.0},
        "slack": 1,
    }


def grid8():
    # 2x4 grid: top row 1-4, bottom row 5-8
    lines = [line(1, 1, 2, 0.1, 90.0), line(2, 2, 3, 0.1, 60.0), line(3, 3, 4, 0.1, 90.0),
             line(4, 5, 6, 0.1, 90.0), line(5, 6, 7, 0.1, 60.0), line(6, 7, 8, 0.1, 90.0),
             line(7, 1, 5, 0.1, 120.0), line(8, 2, 6, 0.1, 120.0), line(9, 3, 7, 0.1, 120.0),
             line(10, 4, 8, 0.1, 120.0)]
    return {
        "name": "grid8",
        "notes": "2x4 grid with a weak middle cut; synthetic market data.",
        "buses": [{"id": i, "load": ld} for i, ld in
                  enumerate([10.0, 20.0, 40.0, 50.0, 10.0, 20.0, 40.0, 60.0], start=1)],
        "lines": lines,
        "generators": [gen(1, 1, 0.0, 150.0, 11.0, 3.0, 2.5, 50.0, 50.0),
                       gen(2, 5, 0.0, 100.0, 14.0, 2.5, 2.0, 40.0, 40.0),
                       gen(3, 4, 0.0, 80.0, 30.0, 7.0, 6.0, 30.0, 30.0),
                       gen(4, 7, 0.0, 60.0, 38.0, 2.0, 2.0, 25.0, 25.0)],
        "wind": [{"id": 1, "bus": 3, "capacity": 90.0, "forecast": 45.0},
                 {"id": 2, "bus": 8, "capacity": 70.0, "forecast": 35.0}],
        "penalties": {"curtail": 70.0, "shed": 500.0},
        "slack": 1,
    }


RTS24_LOAD = [108, 97, 180, 74, 71, 136, 125, 171, 175, 195, 0, 0,
              265, 194, 317, 100, 0, 333, 181, 128, 0, 0, 0, 0]

RTS24_LINES = [
    (1, 2, 0.0139, 175), (1, 3, 0.2112, 175), (1, 5, 0.0845, 175), (2, 4, 0.1267, 175),
    (2, 6, 0.1920, 175), (3, 9, 0.1190, 175), (3, 24, 0.0839, 400), (4, 9, 0.1037, 175),
    (5, 10, 0.0883, 175), (6, 10, 0.0605, 175), (7, 8, 0.0614, 175), (8, 9, 0.1651, 175),
    (8, 10, 0.1651, 175), (9, 11, 0.0839, 400), (9, 12, 0.0839, 400), (10, 11, 0.0839, 400),
    (10, 12, 0.0839, 400), (11, 13, 0.0476, 500), (11, 14, 0.0418, 500), (12, 13, 0.0476, 500),
    (12, 23, 0.0966, 500), (13, 23, 0.0865, 500), (14, 16, 0.0389, 500), (15, 16, 0.0173, 500),
    (15, 21, 0.0490, 500), (15, 21, 0.0490, 500), (15, 24, 0.0519, 500), (16, 17, 0.0259, 500),
    (16, 19, 0.0231, 500), (17, 18, 0.0144, 500), (17, 22, 0.1053, 500), (18, 21, 0.0259, 500),
    (18, 21, 0.0259, 500), (19, 20, 0.0396, 500), (19, 20, 0.0396, 500), (20, 23, 0.0216, 500),
    (20, 23, 0.0216, 500), (21, 22, 0.0678, 500),
]

# bus, pmin, pmax, c, c_up, c_dn, R+, R-
RTS24_GENS = [
    (1, 30.4, 152, 13.32, 15, 14, 40, 40),
    (2, 30.4, 152, 13.32, 15, 14, 40, 40),
    (7, 75.0, 350, 20.70, 10, 9, 70, 70),
    (13, 206.85, 591, 20.93, 8, 7, 180, 180),
    (15, 12.0, 60, 26.11, 7, 5, 60, 60),
    (15, 54.25, 155, 10.52, 16, 14, 30, 30),
    (16, 54.25, 155, 10.52, 16, 14, 30, 30),
    (18, 100.0, 400, 6.02, 0, 0, 0, 0),
    (21, 100.0, 400, 5.47, 0, 0, 0, 0),
    (22, 0.0, 300, 0.00, 0, 0, 0, 0),
    (23, 108.5, 310, 10.52, 17, 16, 60, 60),
    (23, 140.0, 350, 10.89, 16, 14, 40, 40),
]

# assumption: de-rated lines (3-24, 14-16, 16-17) and wind sites besides 3 and 5
RTS24_DERATE = {7: 200.0, 23: 250.0, 28: 250.0}
RTS24_WIND = [(3, 120.0), (5, 110.0), (7, 90.0), (16, 100.0), (21, 80.0), (23, 95.0)]


def rts24():
    lines = []
    for k, (f, t, x, r) in enumerate(RTS24_LINES, start=1):
        lines.append(line(k, f, t, x, float(RTS24_DERATE.get(k, r))))
    gens = [gen(k, *row) for k, row in enumerate(RTS24_GENS, start=1)]
    for g in gens:
        for key in ("p_min", "p_max", "c", "c_up", "c_dn", "r_up_max", "r_dn_max"):
            g[key] = float(g[key])
    return {
        "name": "rts24",
        "notes": ("IEEE RTS-24, single period at peak load. Assumptions: lines 7 (3-24), 23 (14-16) "
                  "and 28 (16-17) de-rated; six 200 MW wind farms at buses 3, 5, 7, 16, 21, 23; "
                  "reserve offers clipped to p_max - p_min."),
        "buses": [{"id": i, "load": float(ld)} for i, ld in enumerate(RTS24_LOAD, start=1)],
        "lines": lines,
        "generators": gens,
        "wind": [{"id": k, "bus": b, "capacity": 200.0, "forecast": f}
                 for k, (b, f) in enumerate(RTS24_WIND, start=1)],
        "penalties": {"curtail": 50.0, "shed": 500.0},
        "slack": 13,
    }


# RTS-96 inter-area ties: (area_a, bus_a, area_b, bus_b, x, rating); bus 325 is the extra tie bus
RTS96_TIES = [
    ((1, 7), (2, 3), 0.161, 175), ((1, 13), (2, 15), 0.075, 500), ((1, 23), (2, 17), 0.074, 500),
    ((1, 21), (3, 25), 0.097, 500), ((2, 23), (3, 18), 0.059, 500), ((3, 25), (3, 23), 0.097, 500),
]
RTS96_WIND = [((1, 3), 270.0), ((1, 5), 270.0), ((2, 7), 270.0), ((2, 16), 270.0), ((3, 21), 270.0)]


def rts96():
    scale = 7500.0 / (3 * sum(RTS24_LOAD))

    def bid(area, bus):
        return 73 if (area, bus) == (3, 25) else (area - 1) * 24 + bus

    buses = []
    for area in (1, 2, 3):
        for b, ld in enumerate(RTS24_LOAD, start=1):
            buses.append({"id": bid(area, b), "load": round(ld * scale, 4)})
    buses.append({"id": 73, "load": 0.0})
    lines = []
    for area in (1, 2, 3):
        for f, t, x, r in RTS24_LINES:
            lines.append(line(len(lines) + 1, bid(area, f), bid(area, t), x, float(r)))
    for a, b, x, r in RTS96_TIES:
        lines.append(line(len(lines) + 1, bid(*a), bid(*b), x, float(r)))
    gens = []
    for area in (1, 2, 3):
        for bus, _pmin, pmax, c, cu, cd, ru, rd in RTS24_GENS:
            g = gen(len(gens) + 1, bid(area, bus), 0.0, float(pmax), float(c),
                    float(cu), float(cd), float(ru), float(rd))
            gens.append(g)
    wind = [{"id": k, "bus": bid(*loc), "capacity": 450.0, "forecast": f}
            for k, (loc, f) in enumerate(RTS96_WIND, start=1)]
    return {
        "name": "rts96",
        "notes": ("Three RTS-24 areas plus six ties (bus 73 is tie bus 325); loads scaled to 7.5 GW; "
                  "p_min = 0; five 450 MW wind farms covering 18% of demand. Tie parameters and wind "
                  "siting are assumptions."),
        "buses": buses,
        "lines": lines,
        "generators": gens,
        "wind": wind,
        "penalties": {"curtail": 50.0, "shed": 500.0},
        "slack": 13,
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for fn in (ring4, congested4, house5, mesh6, grid8, rts24, rts96):
        doc = fn()
        (OUT / f"{doc['name']}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(doc["name"], len(doc["buses"]), len(doc["lines"]), len(doc["generators"]))


if __name__ == "__main__":
    main()
