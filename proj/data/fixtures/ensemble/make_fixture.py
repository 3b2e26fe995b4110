"""Regenerates the 8-model ensemble fixture and its expected scores.

Each model is wrong on its own disjoint set of words, so a plurality vote
recovers the gold labels everywhere. Expected macro scores come from
scikit-learn and serve as an independent check on the C++ metrics.

    python3 make_fixture.py   # writes gold.jsonl, model*.jsonl, expected.json
"""

import json
import random
from pathlib import Path

from sklearn.metrics import accuracy_score, precision_recall_fscore_support

CLASSES = ["ADE", "Dosage", "Drug", "Duration", "Form", "Frequency", "Reason", "Route", "Strength"]
LABELS = ["O"] + [f"{p}-{c}" for c in CLASSES for p in "BI"]
VOCAB = {
    "O": ["the", "patient", "was", "given", "for", "and", "after", "."],
    "ADE": ["rash", "nausea", "dizziness"],
    "Dosage": ["one", "two", "tablet"],
    "Drug": ["paracetamol", "amoxicillin", "warfarin"],
    "Duration": ["week", "days", "month"],
    "Form": ["tablets", "capsule", "solution"],
    "Frequency": ["daily", "twice", "nightly"],
    "Reason": ["pain", "infection", "fever"],
    "Route": ["oral", "iv", "topical"],
    "Strength": ["500mg", "10mg", "5ml"],
}
N_MODELS = 8
N_DOCS = 10
WORDS_PER_DOC = 16
ERRORS_PER_MODEL = 12

here = Path(__file__).resolve().parent
rng = random.Random(20240607)


def make_doc(i):
    words, labels = [], []
    while len(words) < WORDS_PER_DOC:
        if rng.random() < 0.45:
            cls = rng.choice(CLASSES)
            for k in range(rng.randint(1, 2)):
                if len(words) == WORDS_PER_DOC:
                    break
                words.append(rng.choice(VOCAB[cls]))
                labels.append(LABELS.index(("B-" if k == 0 else "I-") + cls))
        else:
            words.append(rng.choice(VOCAB["O"]))
            labels.append(0)
    return {"doc_id": f"letter{i:02d}", "words": words, "labels": labels}


docs = [make_doc(i) for i in range(N_DOCS)]
gold = [l for d in docs for l in d["labels"]]
positions = list(range(len(gold)))
rng.shuffle(positions)
wrong_at = [set(positions[m * ERRORS_PER_MODEL:(m + 1) * ERRORS_PER_MODEL]) for m in range(N_MODELS)]

preds = []
for m in range(N_MODELS):
    p = []
    for pos, g in enumerate(gold):
        if pos in wrong_at[m]:
            p.append((g + 1 + rng.randrange(len(LABELS) - 1)) % len(LABELS))
        else:
            p.append(g)
    preds.append(p)


def logits_for(label, pieces):
    out = []
    for k in range(pieces):
        v = [round(rng.uniform(-1.0, 1.0), 4) for _ in LABELS]
        v[label] = round(4.0 - k + rng.uniform(0.0, 0.5), 4)
        out.append(v)
    return out


header = {"format_version": 1, "kind": "logits", "labels": LABELS}
for m in range(N_MODELS):
    lines = [json.dumps({**header, "model_id": f"model{m}"}, separators=(",", ":"))]
    pos = 0
    for d in docs:
        subwords = []
        for w, word in enumerate(d["words"]):
            pieces = 1 + rng.randrange(3)
            step = max(1, -(-len(word) // pieces))
            for k, lg in enumerate(logits_for(preds[m][pos], pieces)):
                text = word[k * step:(k + 1) * step] or word[-1:]
                subwords.append({"text": ("##" if k else "") + text, "word_index": w, "logits": lg})
            pos += 1
        lines.append(json.dumps({"doc_id": d["doc_id"], "num_words": len(d["words"]),
                                 "subwords": subwords}, separators=(",", ":")))
    (here / f"model{m}.jsonl").write_text("\n".join(lines) + "\n")

(here / "gold.jsonl").write_text("".join(
    json.dumps({"doc_id": d["doc_id"], "words": d["words"],
                "labels": [LABELS[l] for l in d["labels"]]}, separators=(",", ":")) + "\n"
    for d in docs))


def scores(pred):
    p, r, f, _ = precision_recall_fscore_support(gold, pred, average="macro", zero_division=0)
    return {"macro_precision": p, "macro_recall": r, "macro_f1": f,
            "accuracy": accuracy_score(gold, pred)}


# Plurality vote with alphabetical tie-break ("O" last); independent of the C++ code.
order = sorted(range(len(LABELS)), key=lambda i: (LABELS[i] == "O", LABELS[i]))
ensemble = []
for pos in range(len(gold)):
    votes = [preds[m][pos] for m in range(N_MODELS)]
    top = max(votes.count(l) for l in set(votes))
    ensemble.append(next(l for l in order if votes.count(l) == top))

expected = {
    "words": len(gold),
    "models": {f"model{m}": scores(preds[m]) for m in range(N_MODELS)},
    "max_vote": scores(ensemble),
}
(here / "expected.json").write_text(json.dumps(expected, indent=2) + "\n")
print(json.dumps(expected["max_vote"]), max(v["macro_f1"] for v in expected["models"].values()))
