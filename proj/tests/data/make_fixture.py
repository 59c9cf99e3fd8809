#!/usr/bin/env python3
"""Regenerates the bundled fixture corpus (fixture.xml + fixture.csv).

The corpus is a small dblp-shaped bibliography: authors enter with one
publication and then publish at a rate that grows with their historical count
and drifts slowly with calendar time. A handful of hand-written edge records
(missing year, out-of-range year, homepage entries) are appended so the
ingestion paths get exercised on realistic input.

Output is deterministic for a given --seed.
"""
import argparse
import math
import random
from xml.sax.saxutils import escape, quoteattr

FIRST_YEAR = 1985
LAST_YEAR = 2012


def poisson(rng, lam):
    # Knuth; lam stays small here.
    limit = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def author_name(idx):
    first = ["Ana", "Bo", "Chen", "Dita", "Emil", "Fatma", "Goran", "Hiro",
             "Ines", "Jonas", "Kaveh", "Lena", "Mei", "Nils", "Olga", "Pavel"]
    last = ["Abe", "Berg", "Costa", "Dahl", "Eriksen", "Fuchs", "Gomez",
            "Hale", "Ivanova", "Jensen", "Kim", "Lund", "Moreau", "Novak"]
    return f"{first[idx % len(first)]} {last[(idx // len(first)) % len(last)]} {idx:04d}"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=20200)
    ap.add_argument("--authors", type=int, default=450)
    ap.add_argument("--xml", default="fixture.xml")
    ap.add_argument("--csv", default="fixture.csv")
    args = ap.parse_args()
    rng = random.Random(args.seed)

    # events[(author, year)] = number of publications
    events = []
    for a in range(args.authors):
        entry = rng.randint(FIRST_YEAR, LAST_YEAR - 2)
        h = 1
        events.append((a, entry))
        for y in range(entry + 1, LAST_YEAR + 1):
            rate = 0.35 * (1.0 + 0.12 * min(h, 20)) * math.exp(-0.025 * (y - 1995))
            if rng.random() < 0.04:  # some researchers leave
                break
            r = poisson(rng, rate)
            for _ in range(r):
                events.append((a, y))
            h += r

    # Group same-year events of different authors into coauthored papers.
    by_year = {}
    for a, y in events:
        by_year.setdefault(y, []).append(a)
    pubs = []  # (key, year, venue, [authors])
    counter = 0
    for y in sorted(by_year):
        pool = by_year[y]
        rng.shuffle(pool)
        i = 0
        while i < len(pool):
            authors = [pool[i]]
            i += 1
            if i < len(pool) and rng.random() < 0.3 and pool[i] != authors[0]:
                authors.append(pool[i])
                i += 1
            counter += 1
            kind = "article" if rng.random() < 0.5 else "inproceedings"
            venue = f"J{rng.randint(1, 12)}" if kind == "article" else f"Conf{rng.randint(1, 9)}"
            prefix = "journals" if kind == "article" else "conf"
            key = f"{prefix}/{venue.lower()}/P{counter:05d}"
            pubs.append((kind, key, y, venue, [author_name(x) for x in authors]))

    # Edge records. An author who only published before the history window,
    # a publication with an implausible year and one with no year at all.
    pubs.append(("article", "journals/old/Early1", 1980, "J1", ["Early Bird 9001"]))
    pubs.append(("article", "journals/old/Early2", 1982, "J1", ["Early Bird 9001"]))
    pubs.append(("article", "journals/bad/Y1850", 1850, "J2", ["Ana Abe 0000"]))

    with open(args.xml, "w", encoding="utf-8", newline="\n") as fx:
        fx.write('<?xml version="1.0" encoding="UTF-8"?>\n<dblp>\n')
        for kind, key, y, venue, authors in pubs:
            fx.write(f"<{kind} key={quoteattr(key)} mdate=\"2020-01-01\">\n")
            for a in authors:
                fx.write(f"<author>{escape(a)}</author>\n")
            fx.write(f"<title>On &amp; about {escape(key)}</title>\n")
            fx.write(f"<year>{y}</year>\n")
            tag = "journal" if kind == "article" else "booktitle"
            fx.write(f"<{tag}>{escape(venue)}</{tag}>\n")
            fx.write(f"</{kind}>\n")
        fx.write('<www key="homepages/x/Someone"><author>Some One</author><title>Home Page</title></www>\n')
        fx.write('<article key="journals/noyear/N1"><author>Bo Abe 0001</author><title>No year</title><journal>J3</journal></article>\n')
        fx.write("</dblp>\n")

    with open(args.csv, "w", encoding="utf-8", newline="\n") as fc:
        fc.write("author_id,year,venue_id,pub_key\n")
        for kind, key, y, venue, authors in pubs:
            for a in authors:
                fc.write(f"{a},{y},{venue},{key}\n")


if __name__ == "__main__":
    main()
