"""Walkthrough: the 5-fold gallery/probe evaluation protocol.

Splits a synthetic corpus into stratified folds, then reports Acc@k
(mean +/- std across folds) for both index scenarios.
"""

import random

from medmatch.corpus import Corpus, MappingPair, MasterlistEntry, split_folds
from medmatch.dense import HashEmbedderSpec
from medmatch.evaluator import EvalConfig, Mode, Scenario, hash_embedder, run_eval
from medmatch.textnorm import load_language_pack

rng = random.Random(7)
words = ["radiografie", "ecografie", "consult", "analiza", "tomografie",
         "toracica", "abdominala", "cardiaca", "renala", "hepatica"]
entries, pairs = [], []
for i in range(25):
    w1, w2 = rng.sample(words, 2)
    mid = f"M{i:03d}"
    entries.append(MasterlistEntry(id=mid, text=f"{w1} {w2}"))
    for v in range(5):
        pairs.append(MappingPair(clinic_text=f"{w1} {w2} varianta {v}", masterlist_id=mid))
corpus = Corpus(masterlist=tuple(entries), pairs=tuple(pairs))

folds = split_folds(corpus, n_folds=5, seed=0)
norm = load_language_pack("ro")
embedder = hash_embedder(HashEmbedderSpec())

for scenario in (Scenario.MASTERLIST_ONLY, Scenario.MASTERLIST_PLUS_PAIRS):
    report = run_eval(
        corpus, folds, EvalConfig(mode=Mode.DENSE, scenario=scenario), norm, embedder
    )
    print(f"\nscenario: {scenario.value}")
    print(report.to_table())
