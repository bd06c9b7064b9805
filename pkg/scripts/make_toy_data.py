"""Regenerate the bundled toy dataset under src/kbrank/data/toy/.

The toy world has a few hundred synthetic people in nine occupations. Each
occupation has its own property profile and article vocabulary, so every
method in the package has something to learn. Output is deterministic.
"""

import csv
import json
import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "kbrank" / "data" / "toy"
SEED = 20161114
N_ENTITIES = 320

PROPERTIES = [
    ("P21", "sex or gender", "sex or gender identity of human or animal", False),
    ("P569", "date of birth", "date on which the subject was born", False),
    ("P19", "place of birth", "most specific known birth location of a person", False),
    ("P27", "country of citizenship", "the object is a country that recognizes the subject as its citizen", False),
    ("P106", "occupation", "occupation of a person", False),
    ("P54", "member of sports team", "sports teams or clubs that the subject represents or represented", False),
    ("P413", "position played on team / speciality", "position or specialism of a player on a team", False),
    ("P647", "drafted by", "which team the player was drafted by", False),
    ("P2416", "sports discipline competed in", "discipline an athlete competed in within a sport", False),
    ("P611", "religious order", "order of monks or nuns to which an individual belongs", False),
    ("P140", "religion", "religion of a person, organization or religious building", False),
    ("P1303", "instrument", "musical instrument that a person plays or teaches or used in a music occupation", False),
    ("P264", "record label", "brand and trademark associated with the marketing of subject music recordings", False),
    ("P102", "member of political party", "the political party of which a person is or has been a member", False),
    ("P39", "position held", "subject currently or formerly holds the object position or public office", False),
    ("P184", "doctoral advisor", "person who supervised the doctorate or PhD thesis of the subject", False),
    ("P101", "field of work", "specialization of a person or organization", False),
    ("P410", "military rank", "military rank achieved by a person", False),
    ("P241", "military branch", "branch to which this military unit, award, office, or person belongs", False),
    ("P607", "conflict", "battles, wars or other military engagements in which the person participated", False),
    ("P1412", "languages spoken, written or signed", "language a person knows or uses", False),
    ("P91", "sexual orientation", "the sexual orientation of the person", False),
    ("P800", "notable work", "notable scientific, artistic or literary work", False),
    ("P551", "residence", "the place where the person is or has been resident", False),
    ("P2048", "height", "vertical length of an entity", False),
    ("P155", "follows", "immediately prior item in a series of which the subject is a part", False),
    ("P214", "VIAF ID", "identifier for the Virtual International Authority File database", True),
    ("P213", "ISNI", "International Standard Name Identifier for an identity", True),
]

BASE = {"P21": 0.98, "P569": 0.95, "P19": 0.7, "P27": 0.8, "P106": 1.0, "P214": 0.5,
        "P213": 0.35, "P1412": 0.25, "P551": 0.15, "P2048": 0.05, "P155": 0.04, "P91": 0.03,
        "P140": 0.08}

OCCUPATIONS = {
    "Q937857": ("association football player", {"P54": 0.95, "P413": 0.85, "P2048": 0.5, "P2416": 0.2},
                "football club league season goal scored match team cup player striker midfielder "
                "defender championship transfer debut squad coach stadium"),
    "Q11774891": ("ice hockey player", {"P54": 0.95, "P413": 0.8, "P647": 0.7, "P2048": 0.45},
                  "hockey national league draft season team goalie winger puck rink playoff "
                  "championship round pick overall signed contract"),
    "Q250867": ("catholic priest", {"P611": 0.7, "P140": 0.9, "P1412": 0.4, "P800": 0.2},
                "priest church catholic jesuit order ordained parish bishop diocese monastery "
                "theology pope seminary mission saint faith"),
    "Q177220": ("singer", {"P1303": 0.6, "P264": 0.75, "P91": 0.08, "P800": 0.3},
                "album song single record label tour band music singer chart released vocal "
                "concert studio hit songwriter"),
    "Q82955": ("politician", {"P102": 0.9, "P39": 0.85, "P551": 0.3, "P1412": 0.35},
               "party election parliament minister elected government political campaign vote "
               "council senator member office policy cabinet"),
    "Q169470": ("physicist", {"P184": 0.6, "P101": 0.8, "P800": 0.35, "P1412": 0.3},
                "physics university research theory professor quantum doctoral thesis laboratory "
                "particle published institute field experiment nobel"),
    "Q189290": ("military officer", {"P410": 0.85, "P241": 0.8, "P607": 0.75, "P551": 0.2},
                "army war battle regiment officer general command infantry military colonel "
                "campaign troops division captain front served"),
    "Q49757": ("poet", {"P1412": 0.75, "P800": 0.7, "P91": 0.12, "P140": 0.15},
               "poet poetry poem verse literary collection language persian wrote published "
               "literature ode anthology writer style"),
    "Q33999": ("actor", {"P2048": 0.25, "P91": 0.1, "P551": 0.25, "P1412": 0.2},
               "film actor role television series starred cast stage theatre director drama "
               "screen award character appeared movie"),
}

GENERAL = ("born family early life career later year known worked moved city country became "
           "received started first second time returned began death married children "
           "education school studied father mother brother sister home").split()

FIRST = ("Anna Boris Carla Dmitri Elena Farid Greta Hugo Irene Jonas Kalim Lena Marco Nadia Oskar "
         "Paula Quentin Rosa Stefan Tamara Umberto Vera Walter Xenia Yusuf Zofia Albert Bianca "
         "Cyril Dora Emil Flora").split()
LAST = ("Abbot Berger Castell Dubois Eriksen Ferrante Gomez Horvath Ivanova Jansen Kowalski Lindqvist "
        "Moreau Novak Olsen Petrov Quinn Rossi Schmidt Tanaka Ueda Varga Weber Xavier Yilmaz Zeller").split()

# Which property of a pair people find more interesting, by occupation.
INTEREST = {
    "Q937857": ["P54", "P413", "P569", "P27", "P2416", "P2048", "P19", "P21", "P647", "P1412", "P551"],
    "Q11774891": ["P54", "P647", "P413", "P569", "P27", "P2048", "P19", "P21", "P2416"],
    "Q250867": ["P611", "P140", "P800", "P1412", "P569", "P19", "P27", "P21", "P39"],
    "Q177220": ["P264", "P1303", "P800", "P569", "P27", "P91", "P19", "P21", "P2048"],
    "Q82955": ["P102", "P39", "P27", "P569", "P19", "P1412", "P551", "P21", "P140"],
    "Q169470": ["P184", "P101", "P800", "P569", "P27", "P19", "P1412", "P21", "P551"],
    "Q189290": ["P410", "P607", "P241", "P569", "P27", "P19", "P21", "P551", "P140"],
    "Q49757": ["P1412", "P800", "P91", "P140", "P569", "P27", "P19", "P21"],
    "Q33999": ["P800", "P569", "P27", "P2048", "P91", "P19", "P21", "P551"],
}


# Words an article uses when it mentions a fact the entity has.
MENTIONS = {
    "P54": "played for the club and the team as a member", "P413": "played in the position on the team",
    "P647": "was drafted by the team as a player", "P2416": "competed in the sports discipline",
    "P611": "joined the religious order", "P140": "religion and faith", "P1303": "played the instrument",
    "P264": "signed to the record label", "P102": "member of the political party",
    "P39": "held the position of office", "P184": "doctoral advisor supervised the thesis",
    "P101": "field of work and research", "P410": "military rank of colonel",
    "P241": "served in the military branch", "P607": "fought in the conflict and battles of the war",
    "P1412": "spoke and wrote the language", "P91": "sexual orientation", "P800": "notable work",
    "P551": "residence in the city", "P2048": "height", "P19": "born in the place",
}


def pseudo_word(rng):
    syll = ["ka", "lo", "mer", "tin", "sa", "vor", "el", "dun", "ri", "bo", "zan", "gu", "pel", "ost"]
    return "".join(rng.choice(syll) for _ in range(rng.randint(2, 4)))


def make_article(rng, label, occ_ids, props):
    words = []
    for occ in occ_ids:
        words += OCCUPATIONS[occ][2].split()
    n = rng.randint(60, 110)
    parts = [f"{label} was born in {rng.randint(1700, 1995)}."]
    for _ in range(n // 10):
        sentence = [rng.choice(words) if rng.random() < 0.55 else rng.choice(GENERAL) for _ in range(10)]
        parts.append(" ".join(sentence).capitalize() + ".")
    for p in props:
        if p in MENTIONS and rng.random() < 0.7:
            parts.append(f"{label.split()[0]} {MENTIONS[p]}.")
    # names of places and people give the vocabulary a long tail
    parts.append(" ".join(pseudo_word(rng).capitalize() for _ in range(rng.randint(3, 8))) + ".")
    return " ".join(parts)


def main():
    rng = random.Random(SEED)
    OUT.mkdir(parents=True, exist_ok=True)
    occ_list = sorted(OCCUPATIONS)
    entities, corpus = [], []
    used = set()
    for i in range(N_ENTITIES):
        eid = f"Q{7000000 + i}"
        label = f"{rng.choice(FIRST)} {rng.choice(LAST)}"
        while label in used:
            label = f"{rng.choice(FIRST)} {rng.choice(LAST)}"
        used.add(label)
        occs = [rng.choice(occ_list)]
        if rng.random() < 0.12:
            other = rng.choice(occ_list)
            if other not in occs:
                occs.append(other)
        probs = dict(BASE)
        for occ in occs:
            for p, pr in OCCUPATIONS[occ][1].items():
                probs[p] = max(probs.get(p, 0), pr)
        props = sorted(p for p, pr in probs.items() if rng.random() < pr)
        desc = " and ".join(OCCUPATIONS[o][0] for o in occs)
        article = None
        if rng.random() < 0.93:
            article = f"doc-{eid}"
            corpus.append({"doc_id": article, "text": make_article(rng, label, occs, props)})
        entities.append({"id": eid, "label": label, "description": desc, "classes": ["Q5"],
                         "occupations": occs, "properties": props, "article": article})
    # a non-human item to exercise the class filter
    entities.append({"id": "Q90000001", "label": "Example Street", "description": "street",
                     "classes": ["Q79007"], "occupations": [], "properties": ["P19"], "article": None})

    with open(OUT / "entities.jsonl", "w", encoding="utf-8") as fh:
        for e in entities:
            fh.write(json.dumps(e, ensure_ascii=False) + "\n")
    with open(OUT / "properties.jsonl", "w", encoding="utf-8") as fh:
        for pid, label, desc, ident in PROPERTIES:
            fh.write(json.dumps({"id": pid, "label": label, "description": desc,
                                 "is_identifier": ident}) + "\n")
    with open(OUT / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for d in corpus:
            fh.write(json.dumps(d, ensure_ascii=False) + "\n")

    labels = {pid: label for pid, label, _, _ in PROPERTIES}
    non_id = [p for p, _, _, ident in PROPERTIES if not ident]
    humans = [e for e in entities if "Q5" in e["classes"] and e["article"]]
    gold = []
    for r in range(60):
        e = rng.choice(humans)
        a, b = rng.sample(non_id, 2)
        order = INTEREST[e["occupations"][0]]
        ra = order.index(a) if a in order else len(order) + 2
        rb = order.index(b) if b in order else len(order) + 2
        p_a = 1 / (1 + math.exp(-(rb - ra) * 0.6))
        votes_a = sum(rng.random() < p_a for _ in range(10))
        gold.append({"record_id": f"toy{r:03d}", "entity_id": e["id"], "entity_label": e["label"],
                     "entity_description": e["description"], "prop_a": labels[a], "prop_b": labels[b],
                     "prop_a_id": a, "prop_b_id": b, "votes_a": votes_a, "votes_b": 10 - votes_a})
    with open(OUT / "gold.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["record_id", "entity_label", "entity_description", "prop_a",
                                           "prop_b", "votes_a", "votes_b", "entity_id", "prop_a_id",
                                           "prop_b_id"], lineterminator="\n")
        w.writeheader()
        w.writerows(gold)

    with open(OUT / "search_counts.jsonl", "w", encoding="utf-8") as fh:
        for e in entities:
            if "Q5" not in e["classes"]:
                continue
            for pid, label, _, _ in PROPERTIES:
                relevant = any(pid in OCCUPATIONS[o][1] for o in e["occupations"])
                mu = 11.0 + (1.5 if relevant else 0.0) + (0.8 if pid in BASE else 0.0)
                count = int(math.exp(rng.gauss(mu, 1.2)))
                fh.write(json.dumps({"query": f"{e['label']} {label}", "count": count},
                                    ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
