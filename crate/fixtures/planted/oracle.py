#!/usr/bin/env python3
"""Generate the planted two-hop fixture and compute its expected retrieval results.

Everything here is written from the format definitions alone (tokenizer, BM25,
hashed bag-of-words encoder, cosine ranking, micro Hits@k). It shares no code
with the Rust crates; the Rust acceptance suite freezes the numbers printed at
the end and checks its own pipeline against them.

Usage: python3 oracle.py            # rewrite fixture files and print expectations
"""
import json
import math
import os
import random
import re

HERE = os.path.dirname(os.path.abspath(__file__))
DIM = 512
N_CAND = 5
TOP_K = 10
K1, B = 1.2, 0.75
MASK = (1 << 64) - 1
SEEDS = (0x6A09E667F3BCC908, 0xBB67AE8584CAA73B, 0x3C6EF372FE94F82B)

DECOMPOSITION_PROMPT = (
    "You are a helpful assistant that breaks down complex, multi-hop questions into a list of "
    "simpler, independent sub-queries. Each sub-query should reflect a single reasoning step and "
    "be answerable on its own.\n"
    "If the question is already simple, return a Python-style list with just the original question.\n"
    "\n"
    "Examples:\n"
    "Question: When was the creator of The Painter's Studio born?\n"
    "Sub-queries: [\"Who created The Painter's Studio?\", \"When was the creator of The Painter's Studio born?\"]\n"
    "\n"
    "Question: What is the capital of Korea?\n"
    "Sub-queries: [\"What is the capital of Korea?\"]"
)
COMPRESSION_PROMPT = (
    "You are a helpful assistant that concisely summarizes only the key information from the source "
    "documents that is relevant to answering the question.\n"
    "Exclude unrelated content and avoid using pronouns."
)
GENERATION_SYSTEM = "You are a helpful assistant."


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & MASK
    return h


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def seeded(term: str, seed: int) -> int:
    return splitmix64(fnv1a64(term.encode()) ^ seed)


def tokenize(text: str):
    return [t for t in re.split(r"[\W_]+", text.lower()) if t]


def mock_embed(text: str, dim: int = DIM):
    v = [0.0] * dim
    for t in tokenize(text):
        v[seeded(t, SEEDS[0]) % dim] += 1.0
        sign = 1.0 if seeded(t, SEEDS[1]) & 1 == 0 else -1.0
        v[seeded(t, SEEDS[2]) % dim] += sign
    n = math.sqrt(sum(x * x for x in v))
    if n == 0.0:
        v = [0.0] * dim
        v[0] = 1.0
        return v
    return [x / n for x in v]


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    return dot / (math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b)))


def request_hash(system: str, user: str) -> int:
    return fnv1a64(system.encode() + b"\x00" + user.encode())


# ---------------------------------------------------------------- fixture text

CHAINS = [
    dict(
        query="Which river runs past the birthplace of the Velmora Labs founder?",
        hop1_title="Velmora Labs profile",
        hop1="Velmora Labs grew quickly after the launch of the first product. "
        "The Velmora Labs founder, Ostrin Kade, was born in Drenwick.",
        hop1_fact="The Velmora Labs founder, Ostrin Kade, was born in Drenwick.",
        hop2_title="Drenwick travel notes",
        hop2="Drenwick lies beside Olvasta, a cold waterway. Fishing boats crowd Olvasta banks at dawn.",
        hop2_fact="Drenwick lies beside Olvasta, a cold waterway.",
        subs=["Who founded Velmora Labs and where was that founder born?", "What waterway lies beside Drenwick?"],
        comps=["Ostrin Kade founded Velmora Labs and was born in Drenwick.",
               "Drenwick lies beside Olvasta, a cold waterway."],
        answer="Olvasta",
    ),
    dict(
        query="In what year did the author of Glass Orchard win the Tamsel Prize?",
        hop1_title="Glass Orchard review",
        hop1="Glass Orchard is the debut novel of the author Mirel Vost. "
        "Critics praised the orchard imagery in the final chapter.",
        hop1_fact="Glass Orchard is the debut novel of the author Mirel Vost.",
        hop2_title="Mirel Vost biography",
        hop2="Mirel Vost collected a literary medal during 1987. Vost lectured across northern colleges afterwards.",
        hop2_fact="Mirel Vost collected a literary medal during 1987.",
        subs=["Who is the author of Glass Orchard?", "When did Mirel Vost collect a literary medal?"],
        comps=["Mirel Vost is the author of Glass Orchard.",
               "Mirel Vost collected a literary medal during 1987."],
        answer="1987",
    ),
    dict(
        query="Which team signed the striker who scored twice in the Corvath Cup final?",
        hop1_title="Corvath Cup final report",
        hop1="The Corvath Cup final ended with a late winner. "
        "Dario Penn scored twice in the Corvath Cup final.",
        hop1_fact="Dario Penn scored twice in the Corvath Cup final.",
        hop2_title="Transfer roundup",
        hop2="Dario Penn joined Halbergen Rovers on a three season contract. Rovers supporters greeted Penn warmly.",
        hop2_fact="Dario Penn joined Halbergen Rovers on a three season contract.",
        subs=["Who scored twice in the Corvath Cup final?", "Which club did Dario Penn join?"],
        comps=["Dario Penn scored twice in the Corvath Cup final.",
               "Dario Penn joined Halbergen Rovers on a three season contract."],
        answer="Halbergen Rovers",
    ),
    dict(
        query="What language is spoken in the country where the Quellin Observatory stands?",
        hop1_title="Quellin Observatory guide",
        hop1="The Quellin Observatory stands on a ridge in Estravia. "
        "The observatory hosts night tours for the public.",
        hop1_fact="The Quellin Observatory stands on a ridge in Estravia.",
        hop2_title="Estravia at a glance",
        hop2="Residents across Estravia speak Nortic at home and at work. Schools teach Nortic from age six.",
        hop2_fact="Residents across Estravia speak Nortic at home and at work.",
        subs=["Where does the Quellin Observatory stand?", "Which tongue do residents across Estravia speak?"],
        comps=["The Quellin Observatory stands on a ridge in Estravia.",
               "Residents across Estravia speak Nortic at home and at work."],
        answer="Nortic",
    ),
    dict(
        query="How tall is the tower designed by the architect of Brisk Hall?",
        hop1_title="Brisk Hall history",
        hop1="Brisk Hall was designed by the architect Anya Torvel. "
        "The hall reopened after a careful restoration.",
        hop1_fact="Brisk Hall was designed by the architect Anya Torvel.",
        hop2_title="Saltmere Spire facts",
        hop2="Anya Torvel also drew Saltmere Spire, which rises 212 meters. Visitors ride lifts up Saltmere Spire.",
        hop2_fact="Anya Torvel also drew Saltmere Spire, which rises 212 meters.",
        subs=["Who was the architect of Brisk Hall?", "How high does Saltmere Spire rise?"],
        comps=["Anya Torvel was the architect of Brisk Hall.",
               "Anya Torvel also drew Saltmere Spire, which rises 212 meters."],
        answer="212 meters",
    ),
]

PLACES = ["Marlow", "Pettick", "Ferrandi", "Kosta", "Umbrel", "Lisk", "Yarrow", "Gantle",
          "Brevin", "Sollis", "Hexley", "Trume", "Nadder", "Quorn", "Wistan", "Ebbry"]
SUBJECTS = ["council", "museum", "harbor", "choir", "market", "archive", "guild", "festival"]
VERBS = ["praised", "renamed", "expanded", "funded", "restored", "closed", "opened", "reviewed"]
OBJECTS = ["an old bridge", "its winter program", "an east wing", "a public garden",
           "its annual parade", "a city library", "a train depot", "its rowing club"]
FUNCTION = {"which", "what", "in", "did", "the", "of", "is", "how", "by", "who", "where", "past"}


def build_fixture():
    rng = random.Random(20251014)
    docs = []  # (title, body, chain index or None, role)
    for ci, chain in enumerate(CHAINS):
        docs.append((chain["hop1_title"], chain["hop1"], ci, "hop1"))
        docs.append((chain["hop2_title"], chain["hop2"], ci, "hop2"))
        content = [w for w in tokenize(chain["query"]) if w not in FUNCTION]
        for j in range(8):
            word = content[j % len(content)]
            place = PLACES[(ci * 3 + j) % len(PLACES)]
            subject = rng.choice(SUBJECTS)
            body = (f"The {subject} of {place} {rng.choice(VERBS)} {rng.choice(OBJECTS)}. "
                    f"{word.capitalize()} season reports reached {place} {rng.choice(SUBJECTS)}.")
            docs.append((f"{place} {subject} bulletin", body, None, "distractor"))
    rng.shuffle(docs)
    return docs


def normalize_ws(text):
    return " ".join(text.split())


def bm25_top(passages, query, n):
    toks = [tokenize(p["text"]) for p in passages]
    N = len(passages)
    avg = sum(len(t) for t in toks) / N
    qterms = []
    for t in tokenize(query):
        if t not in qterms:
            qterms.append(t)
    scored = []
    for p, t in zip(passages, toks):
        s = 0.0
        for term in qterms:
            df = sum(1 for other in toks if term in other)
            if df == 0:
                continue
            tf = t.count(term)
            if tf == 0:
                continue
            idf = math.log(1.0 + (N - df + 0.5) / (df + 0.5))
            s += idf * (tf * (K1 + 1.0)) / (tf + K1 * (1.0 - B + B * len(t) / avg))
        if s > 0.0:
            scored.append((-s, p["passage_id"], p))
    scored.sort(key=lambda x: (x[0], x[1]))
    return [p for _, _, p in scored[:n]]


def compression_message(question, cands):
    return "Question: " + question + "\n\nDocuments:\n" + "\n---\n".join(p["text"] for p in cands)


def first_sentence(text):
    m = re.search(r"[.!?](\s|$)", text)
    return text[: m.end()].strip() if m else text


def dense_rank(passages, vecs, q):
    scored = [(-cosine(q, v), p["passage_id"]) for p, v in zip(passages, vecs)]
    scored.sort()
    return [pid for _, pid in scored]


def tolerant_rank(vecs, passages, q, gold, eps=1e-12):
    """1 + number of passages scoring more than eps above gold; immune to ulp-level ties."""
    scores = {p["passage_id"]: cosine(q, v) for p, v in zip(passages, vecs)}
    return 1 + sum(1 for s in scores.values() if s > scores[gold] + eps)


def mean(vs):
    return [sum(c) / len(vs) for c in zip(*vs)]


def main():
    docs = build_fixture()
    corpus = []
    passages = []
    gold = {}
    for ordinal, (title, body, ci, role) in enumerate(docs):
        corpus.append({"title": title, "body": body, "source": "Planted Gazette",
                       "published_at": "2025-01-%02dT00:00:00+00:00" % (ordinal % 28 + 1),
                       "category": "fixture", "url": "https://example.invalid/%d" % ordinal})
        pid = "d%03d#0" % ordinal
        passages.append({"passage_id": pid, "text": normalize_ws(body)})
        if ci is not None:
            gold.setdefault(ci, {})[role] = pid

    queries = []
    for ci, chain in enumerate(CHAINS):
        queries.append({
            "query": chain["query"],
            "answer": chain["answer"],
            "question_type": "inference_query",
            "evidence_list": [
                {"fact": chain["hop1_fact"], "title": chain["hop1_title"]},
                {"fact": chain["hop2_fact"], "title": chain["hop2_title"]},
            ],
        })

    # scripted transcript covering every LLM request the pipeline variants can make
    transcript = {}

    def script(system, user, response):
        transcript[request_hash(system, user)] = response

    for chain in CHAINS:
        q = chain["query"]
        script(DECOMPOSITION_PROMPT, q, json.dumps(chain["subs"]))
        for sq, comp in list(zip(chain["subs"], chain["comps"])) + [(q, chain["comps"][0])]:
            cands = bm25_top(passages, sq, N_CAND)
            script(COMPRESSION_PROMPT, compression_message(sq, cands), comp)
            for p in cands:
                script(COMPRESSION_PROMPT, compression_message(sq, [p]), first_sentence(p["text"]))
        script(GENERATION_SYSTEM, "Write a passage that answers the question: " + q,
               "This passage discusses " + q.rstrip("?").lower() + ".")
        script(GENERATION_SYSTEM, "Write a passage that answers the following query: " + q,
               "This passage discusses " + q.rstrip("?").lower() + ".")

    with open(os.path.join(HERE, "corpus.json"), "w") as f:
        json.dump(corpus, f, indent=2)
        f.write("\n")
    with open(os.path.join(HERE, "queries.json"), "w") as f:
        json.dump(queries, f, indent=2)
        f.write("\n")
    with open(os.path.join(HERE, "transcript.jsonl"), "w") as f:
        for h in sorted(transcript):
            f.write(json.dumps({"request_hash": "%016x" % h, "response": transcript[h]}) + "\n")

    # ---------------------------------------------------------- expected runs
    vecs = [mock_embed(p["text"]) for p in passages]
    plain_hits = decor_hits = total = 0
    for ci, chain in enumerate(CHAINS):
        q = chain["query"]
        golds = [gold[ci]["hop1"], gold[ci]["hop2"]]
        total += len(golds)
        plain = dense_rank(passages, vecs, mock_embed(q))
        parts = [mock_embed(q)]
        for sq, comp in zip(chain["subs"], chain["comps"]):
            assert bm25_top(passages, sq, N_CAND), sq
            parts.append(mock_embed(sq + " " + comp))
        decor = dense_rank(passages, vecs, mean(parts))
        for g in golds:
            plain_hits += g in plain[:TOP_K]
            decor_hits += g in decor[:TOP_K]
        print("query %d gold %s tolerant plain ranks %s decor ranks %s" % (
            ci, golds,
            [tolerant_rank(vecs, passages, mock_embed(q), g) for g in golds],
            [tolerant_rank(vecs, passages, mean(parts), g) for g in golds]))
        assert not set(tokenize(q)) & set(tokenize(chain["hop2"])), "hop-2 must be lexically disjoint"
    print("plain micro hits@10 = %d/%d" % (plain_hits, total))
    print("decor micro hits@10 = %d/%d" % (decor_hits, total))

    # encoder sanity values used by unit tests
    rc, rch, bd = mock_embed("red cat", 256), mock_embed("red cat hat", 256), mock_embed("blue dog", 256)
    print("cos(red cat, red cat hat) = %.12f" % cosine(rc, rch))
    print("cos(red cat, blue dog)    = %.12f" % cosine(rc, bd))
    print("idf(N=3, df=1) = %.12f" % math.log(1 + 2.5 / 1.5))
    print("fnv1a64('') = %016x, fnv1a64('a') = %016x" % (fnv1a64(b""), fnv1a64(b"a")))


if __name__ == "__main__":
    main()
