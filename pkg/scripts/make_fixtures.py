"""Regenerate the committed test fixtures under tests/data/."""

from __future__ import annotations

import itertools
from pathlib import Path

from clarimap import toydata
from clarimap.corpus import write_tsv
from clarimap.mrl import parse_mrl

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

HAND_PICKED = [
    "query(area(keyval('name','Bradford')),nwr(keyval('amenity','pub')),qtype(latlong))",
    "query(area(keyval('name','Marseille')),nwr(keyval('leisure','park'),keyval('landuse','recreation_ground')),qtype(latlong))",
    "query(area(keyval('name','Birmingham')),nwr(keyval('shop','alcohol')),qtype(latlong))",
    "query(around(center(area(keyval('name','Glasgow')),nwr(keyval('name','Wall Street'))),search(nwr(keyval('shop','wine'))),maxdist(DIST_INTOWN),topx(1)),qtype(count))",
    "query(area(keyval('name','Heidelberg')),nwr(keyval('shop','wine')),qtype(count))",
    "query(area(keyval('name','Nantes')),nwr(keyval('amenity','cinema')),qtype(latlong))",
    "query(area(keyval('name','Paris')),nwr(keyval('amenity','cinema')),qtype(latlong))",
    "query(area(keyval('name','Frankfurt am Main')),nwr(keyval('railway','station')),qtype(count))",
    "query(area(keyval('name','Edinburgh')),nwr(keyval('amenity','bank')),qtype(findkey('opening_hours')))",
    "query(around(center(area(keyval('name','Lyon')),nwr(keyval('name','Gare de Lyon'))),search(nwr(keyval('amenity','pharmacy'))),maxdist(WALKING_DIST)),qtype(latlong))",
]

CITIES = [
    "Aachen", "Bern", "Calais", "Dover", "Essen", "Fulda", "Ghent", "Hull",
    "Inverness", "Jena", "Kiel", "Lille", "Metz", "Nice", "Oslo", "Pisa",
    "Quimper", "Reims", "Sete", "Trier", "Ulm", "Vigo", "Worms", "York",
]

TAGS = [
    ("amenity", "pub"), ("amenity", "bar"), ("amenity", "cinema"),
    ("amenity", "bank"), ("amenity", "pharmacy"), ("amenity", "school"),
    ("shop", "bakery"), ("shop", "butcher"), ("shop", "wine"),
    ("shop", "alcohol"), ("leisure", "park"), ("leisure", "playground"),
    ("tourism", "hotel"), ("tourism", "museum"), ("landuse", "recreation_ground"),
    ("railway", "station"), ("highway", "bus_stop"), ("natural", "peak"),
]

QTYPES = ["qtype(latlong)", "qtype(count)", "qtype(findkey('name'))", "qtype(findkey('website'))"]
DISTS = ["DIST_INTOWN", "WALKING_DIST", "DIST_OUTTOWN", "5000"]


def build_parses(minimum: int = 220) -> list[str]:
    parses = list(HAND_PICKED)
    grid = list(itertools.product(CITIES, TAGS))
    for i, (city, (key, val)) in enumerate(grid[:minimum]):
        qt = QTYPES[i % len(QTYPES)]
        style = i % 4
        if style == 0:
            p = f"query(area(keyval('name','{city}')),nwr(keyval('{key}','{val}')),{qt})"
        elif style == 1:
            extra_key, extra_val = TAGS[(i * 7 + 3) % len(TAGS)]
            p = (
                f"query(area(keyval('name','{city}')),"
                f"nwr(keyval('{key}','{val}'),keyval('{extra_key}','{extra_val}')),{qt})"
            )
        elif style == 2:
            dist = DISTS[i % len(DISTS)]
            p = (
                f"query(around(center(area(keyval('name','{city}')),"
                f"nwr(keyval('name','Main Square'))),search(nwr(keyval('{key}','{val}'))),"
                f"maxdist({dist}),topx(1)),qtype(latlong))"
            )
        else:
            p = f"query(area(keyval('name','{city}')),nwr(keyval('{key}','{val}'),least(topx(2))),{qt})"
        parses.append(p)
    seen = set()
    unique = []
    for p in parses:
        parse_mrl(p)
        if p not in seen:
            seen.add(p)
            unique.append(p)
    return unique


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)

    parses = build_parses()
    (DATA / "parses_fixture.txt").write_text("\n".join(parses) + "\n", encoding="utf-8")
    print(f"parses_fixture.txt: {len(parses)} parses")

    grid = toydata.overfit_world(n_cities=4, n_pois=3)
    write_tsv(DATA / "toy_train.tsv", grid[:8])
    write_tsv(DATA / "toy_dev.tsv", grid[8:10])
    write_tsv(DATA / "toy_test.tsv", grid[10:12])
    print("toy splits: 8/2/2")


if __name__ == "__main__":
    main()
