#!/usr/bin/env python3
"""Regenerate the bundled toy corpora under crates/core/resources/.

Output is deterministic for a fixed seed. Two corpora are produced:

  toy_keywords_{train,test}.jsonl  single sentences, no source document
  toy_entities_{train,test}.jsonl  short news-style documents with a summary

plus gazetteer.txt listing every entity surface used by the entity corpus.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "resources"

# ---------------------------------------------------------------------------
# keyword corpus

NOUNS = """
company market price report city council school student teacher hospital
doctor patient driver car road bridge river village farmer crop harvest
storm weather season team coach player match stadium fan ticket league
game season album singer band concert festival museum painting artist
book author library story film director actor camera studio restaurant
chef menu dinner kitchen salon nail coffee shop owner customer service
staff manager office worker factory plant engine software currency bank
loan investor industry product provider network phone computer website
police officer court judge lawyer case election vote minister government
budget tax policy plan project island beach hotel room trip holiday
flight airport passenger train station garden park tree flower dog cat
neighbor family child parent friend house street market bakery bread
cake pizza burger salad sauce wine beer table window door floor
""".split()

ADJS = """
new old big small local national global leading young famous popular
quiet busy friendly rude cheap expensive clean dirty fresh delicious
strong weak early late rapid slow huge tiny modern ancient public private
bright dark warm cold happy angry nervous calm serious simple
""".split()

VERBS_PAST = """
opened closed announced rejected approved visited praised criticized
built launched sold bought finished started delayed cancelled won lost
joined left signed reviewed served cooked painted wrote recorded filmed
repaired cleaned expanded reduced raised lowered hired fired welcomed
""".split()

ADVS = """
always never often rarely quickly slowly finally recently suddenly
quietly proudly easily
""".split()

TIMES = """
yesterday today tonight last_week this_year on_monday on_friday
in_march in_june next_month
""".split()

PLACES_LOWER = """
downtown uptown abroad nearby overseas upstairs
""".split()

PATTERNS = [
    "the {adj} {noun} {verb} the {noun} {time} .",
    "the {noun} {adv} {verb} a {adj} {noun} in the {noun} .",
    "a {adj} {noun} {verb} the {adj} {noun} , said the {noun} .",
    "our {noun} {verb} the {noun} and the {noun} {verb} the {noun} .",
    "the {noun} is a {adj} {noun} of {noun} {noun} for the {noun} {noun} .",
    "i {adv} go to this {noun} {noun} because the {noun} is {adj} .",
    "the {noun} {verb} {num} {noun}s {time} , according to the {noun} .",
    "after the {noun} {verb} the {noun} , the {adj} {noun} {verb} a {noun} .",
    "the {adj} {noun} and the {adj} {noun} {verb} the {noun} {place} .",
    "this {noun} has the most {adj} {noun} in the {noun} !",
    "the {noun} {verb} the {noun} , but the {noun} {adv} {verb} it .",
    "we {verb} a {adj} {noun} at the {noun} {time} .",
    "the {noun} of the {noun} {verb} the {adj} {noun} .",
    "every {noun} {adv} {verb} the {noun} {place} .",
    "the {noun} said the {adj} {noun} {verb} {num} {noun}s .",
]

NUMS = "two three four five six ten twelve twenty hundreds".split()


def fill(pattern, rng):
    out = []
    for piece in pattern.split():
        if piece.startswith("{") and piece.endswith("}s"):
            out.append(rng.choice(NOUNS) + "s")
            continue
        slot = {
            "{adj}": ADJS,
            "{noun}": NOUNS,
            "{verb}": VERBS_PAST,
            "{adv}": ADVS,
            "{time}": TIMES,
            "{num}": NUMS,
            "{place}": PLACES_LOWER,
        }.get(piece)
        if slot is None:
            out.append(piece)
        else:
            out.extend(rng.choice(slot).split("_"))
    return " ".join(out)


def keyword_corpus(rng, n):
    seen = set()
    rows = []
    while len(rows) < n:
        a = fill(rng.choice(PATTERNS), rng)
        if rng.random() < 0.3:
            a = a[:-2] + " , and " + fill(rng.choice(PATTERNS), rng)
        if a in seen:
            continue
        seen.add(a)
        rows.append({"source": None, "target": a})
    return rows


# ---------------------------------------------------------------------------
# entity corpus

PERSONS = [
    "Amir Khan", "Manny Pacquiao", "Bob Arum", "Chris Algieri",
    "Floyd Mayweather", "Chris Gallizzi", "Maria Lopez", "John Carter",
    "Anna Schmidt", "Kenji Tanaka", "Laura Bennett", "David Okafor",
    "Sofia Rossi", "Peter Novak", "Elena Petrova", "Omar Haddad",
    "Grace Kim", "Lucas Martin", "Hannah Weber", "Ravi Patel",
]
PLACES = [
    "Abu Dhabi", "UAE", "Las Vegas", "New York", "London", "Paris",
    "Tokyo", "Berlin", "Madrid", "Cairo", "Sydney", "Toronto", "Rome",
    "Mumbai", "Seoul", "Chicago",
]
ORGS = [
    "Nintendo", "Apple", "Hyperkin", "United Nations", "Red Cross",
    "Toyota", "World Bank", "BBC", "NASA", "Real Madrid", "Google",
    "Siemens",
]

# summary clauses: (text, slot types)
CLAUSES = [
    ("{P} could face {P} in {L} .", "PPL"),
    ("{P} is set to fight {P} next month .", "PP"),
    ("{P} said {O} will open a new office in {L} .", "POL"),
    ("{O} shares fell in {L} on monday .", "OL"),
    ("{P} is set to visit {L} next month .", "PL"),
    ("the deal was backed by {O} .", "O"),
    ("{P} won the title .", "P"),
    ("{O} has designed a new case for {O} phones .", "OO"),
    ("{P} met {P} and {P} in {L} .", "PPPL"),
    ("officials in {L} welcomed the plan .", "L"),
    ("{P} will join {O} this year .", "PO"),
    ("the match in {L} was delayed .", "L"),
    ("{O} and {O} signed a deal in {L} .", "OOL"),
    ("{P} praised the team .", "P"),
]

DOC_FILLER = [
    "the announcement came after weeks of talks .",
    "critics said the decision was rushed .",
    "the event drew a large crowd .",
    "no further details were given .",
    "the plan is expected to cost millions .",
    "fans reacted with surprise on social media .",
    "the talks will continue next week .",
    "local media reported the news first .",
]

DOC_REWRITE = [
    ("{0}", "reports said {0}"),
    ("{0}", "on tuesday , {0}"),
    ("{0}", "{0}"),
    ("{0}", "sources confirmed that {0}"),
]

DISTRACTORS = [
    "{P} was not available for comment .",
    "a spokesman for {O} declined to comment .",
    "the story was also covered in {L} .",
]


def pick(kind, rng):
    return rng.choice({"P": PERSONS, "L": PLACES, "O": ORGS}[kind])


def realize(template, kinds, rng):
    out = template
    names = []
    for kind in kinds:
        name = pick(kind, rng)
        names.append(name)
        out = out.replace("{" + kind + "}", name, 1)
    return out, names


def entity_example(rng, k):
    clauses = []
    remaining = k
    while remaining > 0:
        fits = [c for c in CLAUSES if len(c[1]) <= remaining]
        text, kinds = rng.choice(fits)
        clauses.append(realize(text, kinds, rng))
        remaining -= len(kinds)
    target = " ".join(c[0] for c in clauses)

    doc = []
    for sentence, _ in clauses:
        body = sentence[:-2]
        _, wrap = rng.choice(DOC_REWRITE)
        doc.append(wrap.format(body) + " .")
    for _ in range(rng.randint(1, 2)):
        t = rng.choice(DISTRACTORS)
        kind = "P" if "{P}" in t else ("O" if "{O}" in t else "L")
        doc.append(realize(t, kind, rng)[0])
    for _ in range(rng.randint(1, 3)):
        doc.append(rng.choice(DOC_FILLER))
    rng.shuffle(doc)
    return {"source": " ".join(doc), "target": target}


def entity_corpus(rng, per_k, ks):
    rows = []
    for k in ks:
        for _ in range(per_k):
            rows.append(entity_example(rng, k))
    rng.shuffle(rows)
    return rows


def write_jsonl(path, rows):
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def main():
    rng = random.Random(20230717)
    kw = keyword_corpus(rng, 5000)
    write_jsonl(OUT / "toy_keywords_train.jsonl", kw[:4400])
    write_jsonl(OUT / "toy_keywords_test.jsonl", kw[4400:])

    ks = range(1, 7)
    write_jsonl(OUT / "toy_entities_train.jsonl", entity_corpus(rng, 500, ks))
    write_jsonl(OUT / "toy_entities_test.jsonl", entity_corpus(rng, 100, ks))

    with open(OUT / "gazetteer.txt", "w") as f:
        for name in sorted(set(PERSONS + PLACES + ORGS)):
            f.write(name + "\n")


if __name__ == "__main__":
    main()
