"""Synthetic miniature corpora for tests, demos and probe runs.

Three worlds, all deterministic given their arguments:

* ``overfit_world`` — a tiny unambiguous grid of city x POI questions used
  as a memorization oracle for the trainer.
* ``ambiguity_world`` — adds an "off license" question whose gold tag is
  genuinely unpredictable from the question alone (both ``shop=wine`` and
  ``shop=alcohol`` appear in training for every city), so only a model that
  reads the clarification dialogue can resolve it.
* ``marking_world`` — maps "off license" deterministically per city, with a
  planted subset of cities whose trained tag contradicts the intended one;
  marking feedback on those cities should flip them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Example, SplitSet

__all__ = [
    "CITIES",
    "POIS",
    "plain_example",
    "ambiguous_example",
    "overfit_world",
    "ambiguity_world",
    "marking_world",
    "MarkingWorld",
]

CITIES = [
    "bradford",
    "paris",
    "nantes",
    "glasgow",
    "lyon",
    "hamburg",
    "dresden",
    "edinburgh",
    "leeds",
    "bristol",
    "porto",
    "geneva",
    "turin",
    "krakow",
    "bergen",
    "malmo",
]

POIS = ["pub", "bar", "cinema", "bank", "pharmacy", "school", "restaurant", "cafe"]

AMBIGUOUS_PHRASE = "off license"
AMBIGUOUS_TAGS = ("wine", "alcohol")


def plain_example(idx: int, city: str, poi: str) -> Example:
    gold = f"query(area(keyval('name','{city}')),nwr(keyval('amenity','{poi}')),qtype(latlong))"
    return Example(id=str(idx), question=f"{poi} in {city}", gold=gold)


def ambiguous_example(idx: int, city: str, tag: str) -> Example:
    gold = f"query(area(keyval('name','{city}')),nwr(keyval('shop','{tag}')),qtype(latlong))"
    return Example(id=str(idx), question=f"{AMBIGUOUS_PHRASE} in {city}", gold=gold)


def count_example(idx: int, city: str, poi: str) -> Example:
    gold = f"query(area(keyval('name','{city}')),nwr(keyval('amenity','{poi}')),qtype(count))"
    return Example(id=str(idx), question=f"how many {poi} in {city}", gold=gold)


def listing_example(idx: int, city: str, poi: str) -> Example:
    gold = (f"query(area(keyval('name','{city}')),nwr(keyval('amenity','{poi}')),"
            f"qtype(findkey('name')))")
    return Example(id=str(idx), question=f"names of {poi} in {city}", gold=gold)


def overfit_world(n_cities: int = 8, n_pois: int = 8) -> list[Example]:
    """Unambiguous grid of n_cities x n_pois question/parse pairs."""
    examples = []
    idx = 1
    for city in CITIES[:n_cities]:
        for poi in POIS[:n_pois]:
            examples.append(plain_example(idx, city, poi))
            idx += 1
    return examples


def ambiguity_world(n_cities: int = 12, n_pois: int = 6, seed: int = 7,
                    total: int | None = None) -> SplitSet:
    """World whose "off license" questions cannot be resolved from text alone.

    Train pairs every city with every POI and with BOTH ambiguous golds.
    Test repeats that double gold, so no question-only model can beat 50%
    on the ambiguous slice; ``seed`` shuffles the per-city tag order.

    ``total`` pads the train split with unambiguous count/listing variants
    over the same city x POI grid until the world holds exactly that many
    examples across all three splits.
    """
    rng = np.random.default_rng(seed)
    cities = CITIES[:n_cities]
    pois = POIS[:n_pois]
    idx = 1
    train: list[Example] = []
    for city in cities:
        for poi in pois:
            train.append(plain_example(idx, city, poi))
            idx += 1
        for tag in AMBIGUOUS_TAGS:
            train.append(ambiguous_example(idx, city, tag))
            idx += 1

    dev: list[Example] = []
    test: list[Example] = []
    for i, city in enumerate(cities):
        for poi in pois[: max(2, n_pois // 2)]:
            test.append(plain_example(idx, city, poi))
            idx += 1
        tags = list(AMBIGUOUS_TAGS)
        rng.shuffle(tags)
        for tag in tags:
            test.append(ambiguous_example(idx, city, tag))
            idx += 1
        if i % 3 == 0:
            dev.append(plain_example(idx, city, pois[-1]))
            idx += 1

    if total is not None:
        need = total - (len(train) + len(dev) + len(test))
        if need < 0:
            raise ValueError(f"world already holds more than {total} examples")
        fillers = []
        for make in (count_example, listing_example):
            for city in cities:
                for poi in pois:
                    fillers.append(make(idx, city, poi))
                    idx += 1
        if need > len(fillers):
            raise ValueError(f"cannot pad to {total}: only {len(fillers)} fillers available")
        train.extend(fillers[:need])

    return SplitSet(train=tuple(train), dev=tuple(dev), test=tuple(test))


@dataclass(frozen=True)
class MarkingWorld:
    """Fine-tuning fixture: splits plus the planted city names."""

    splits: SplitSet
    planted_cities: tuple[str, ...]
    intended_tag: str = "alcohol"
    trained_tag: str = "wine"

    def planted_eval(self) -> list[Example]:
        """Ambiguous questions for planted cities, gold = the intended tag."""
        out = []
        for i, city in enumerate(self.planted_cities, start=1):
            out.append(ambiguous_example(i, city, self.intended_tag))
        return out

    def untouched_eval(self) -> list[Example]:
        """Plain examples whose behavior fine-tuning must not disturb."""
        return [ex for ex in self.splits.test if AMBIGUOUS_PHRASE not in ex.question]


def marking_world(n_cities: int = 10, n_pois: int = 6, n_planted: int = 4) -> MarkingWorld:
    """World with a deterministic city -> tag mapping and planted mistakes.

    The first ``n_planted`` cities train "off license" as ``shop=wine`` even
    though the intended tag is ``alcohol``; the remaining cities train it as
    ``shop=alcohol``, so the correction target is well represented.
    """
    cities = CITIES[:n_cities]
    planted = tuple(cities[:n_planted])
    pois = POIS[:n_pois]
    idx = 1
    train: list[Example] = []
    test: list[Example] = []
    for city in cities:
        for poi in pois:
            train.append(plain_example(idx, city, poi))
            idx += 1
        tag = "wine" if city in planted else "alcohol"
        train.append(ambiguous_example(idx, city, tag))
        idx += 1
    for city in cities:
        for poi in pois[:2]:
            test.append(plain_example(idx, city, poi))
            idx += 1
    return MarkingWorld(
        splits=SplitSet(train=tuple(train), dev=(), test=tuple(test)),
        planted_cities=planted,
    )
