"""Synthetic listing generator with planted text -> log-price structure.

Five signal words each add a known amount to the log price; everything
else (filler text, structured attributes, industry) is noise. The planted
weights let end-to-end tests verify that the pipeline recovers the signal
words and predicts prices well, and that quality stops improving once all
signal features are selected.
"""

from __future__ import annotations

import numpy as np

from .corpus import DataProduct

SIGNAL_WORDS = ["realtime", "exclusive", "verified", "granular", "enriched"]
SIGNAL_WEIGHTS = [0.8, 0.6, 0.5, 0.4, 0.3]
BASE_LOG_PRICE = 5.0
NOISE_STD = 0.05

_FILLERS = [
    "records", "dataset", "feed", "monthly", "weekly", "daily", "updated",
    "coverage", "global", "regional", "historical", "sample", "fields",
    "schema", "delivery", "subscription", "api", "bulk", "download",
    "quality", "curated", "aggregated", "anonymized", "panel", "survey",
    "transactions", "metrics", "signals", "insights", "trends", "profiles",
    "segments", "attributes", "identifiers", "mapping", "taxonomy",
    "normalized", "structured", "raw", "snapshot", "archive", "stream",
    "events", "observations", "measurements", "estimates", "forecasts",
    "benchmarks", "indices", "scores", "ratings", "reviews", "listings",
    "companies", "consumers", "households", "devices", "locations",
    "countries", "cities", "markets", "sectors", "categories", "brands",
    "products", "prices", "volumes", "shipments", "contracts", "filings",
    "licenses", "patents", "publications", "studies", "reports", "alerts",
]

_DOMAIN_WORDS = [
    ["ecommerce", "sales", "inventory", "consumer", "shopping"],
    ["retail", "location", "advertising", "foot", "traffic"],
    ["financial", "banking", "insurance", "investment", "trading"],
    ["healthcare", "clinical", "disease", "patient", "genomic"],
    ["energy", "mining", "agricultural", "oil", "crop"],
    ["government", "census", "regulatory", "public", "records"],
    ["media", "streaming", "content", "social", "music"],
    ["telecom", "network", "mobile", "call", "broadband"],
    ["automotive", "vehicle", "sensor", "traffic", "fleet"],
    ["manufacturing", "production", "supply", "factory", "industrial"],
    ["environmental", "climate", "pollution", "weather", "emissions"],
    ["gaming", "player", "game", "esports", "playtime"],
]


def generate_products(n: int = 600, seed: int = 0) -> list[DataProduct]:
    """Deterministic synthetic corpus of n listings."""
    rng = np.random.default_rng(seed)
    products = []
    for i in range(n):
        industry = int(rng.integers(0, 12))
        domain = _DOMAIN_WORDS[industry]
        present = rng.random(len(SIGNAL_WORDS)) < 0.5
        log_price = BASE_LOG_PRICE + float(
            present @ np.array(SIGNAL_WEIGHTS)) + float(rng.normal(0, NOISE_STD))

        name_words = [str(rng.choice(domain)), str(rng.choice(_FILLERS))]
        detail_words = [str(w) for w in rng.choice(_FILLERS, size=6)]
        desc_words = [str(w) for w in rng.choice(_FILLERS, size=18)]
        desc_words += [str(rng.choice(domain)) for _ in range(3)]
        for word, hit in zip(SIGNAL_WORDS, present):
            if hit:
                desc_words.append(word)
        rng.shuffle(desc_words)

        scores = np.round(rng.uniform(0.0, 0.3, size=12), 6)
        scores[industry] = 1.0

        products.append(DataProduct(
            id="syn-%04d" % i,
            name=" ".join(name_words),
            detail=" ".join(detail_words),
            description=" ".join(desc_words),
            listed_provider=int(rng.integers(0, 2)),
            volume=int(rng.integers(1, 50)),
            historical_version=int(rng.integers(0, 3)),
            future_version=int(rng.integers(0, 2)),
            sensitive=int(rng.integers(0, 3)),
            data_sample=int(rng.integers(0, 2)),
            support_email=int(rng.integers(0, 2)),
            support_url=int(rng.integers(0, 2)),
            refund_policy=int(rng.integers(0, 5)),
            price=float(np.exp(log_price)),
            industry_scores=[float(s) for s in scores],
        ))
    return products
