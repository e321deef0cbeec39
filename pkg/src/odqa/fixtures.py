"""Deterministic fixture corpora shipped with the package.

The corpora are synthetic but engineered.  Gold passages carry rare topic
keywords that lexical re-ranking rewards heavily, a block of distractor
passages repeats common query words that pull the hashed dense encoder off
course, and every gold passage restates its answer in a standalone sentence
so the fuzzy-match evaluator credits it under any encoder.  All builders
are pure functions of literal data and fixed seeds.
"""

from __future__ import annotations

import datetime
import random

from .corpus import ChunkStore, PassageChunk, QAPair
from .text import tokenize

DEMO_QUESTION = "What are symptoms of covid?"
TWO_TOPIC_QUESTION = "mask mandate compliance in clinics"

# Topic keywords appear only in their own gold passage, so their document
# frequency is 1 and lexical scoring can single the passage out.
_TOPIC_NAMES = (
    "pulmora", "aldovir", "bexomel", "cortavax", "dexilor", "envipro",
    "fluorvex", "gravitol", "hepatra", "imovex", "jantivir", "kelpharin",
    "lumiral", "mavitrex", "nobivax", "orvipan", "quintovir", "ravoxil",
    "selkovir", "tavimed", "ultravin", "vexodil", "wistaral", "xenovir",
)

# Answer vocabulary is reserved: none of these words appear anywhere except
# in the owning gold passage, so a fuzzy match cannot fire elsewhere.
_ANSWERS = (
    "fever and night sweats", "zinc therapy", "plasma infusion",
    "steroid tapering", "saline rinses", "antiviral drops",
    "oxygen support", "herbal decoction", "iron chelation",
    "protein shakes", "lipid emulsion", "copper gluconate",
    "nasal irrigation", "cold compresses", "vitamin boluses",
    "honey lozenges", "magnesium salts", "enzyme blends",
    "charcoal filtration", "peptide sprays", "mineral baths",
    "algae extract", "citrus tonics", "clay poultices",
)

_CLEAN_TOPIC_COUNT = 16
_DISTRACTOR_COUNT = 40
_TOTAL_CHUNKS = 200

# Neutral words only: no topic names, no answer words, no question words.
_FILLER_WORDS = (
    "centrifuge", "protocol", "cohort", "baseline", "archive", "ledger",
    "sensor", "voltage", "gradient", "matrix", "kernel", "module",
    "binder", "crate", "lattice", "pivot", "quorum", "raster",
    "sediment", "tundra", "valley", "willow", "zephyr", "basalt",
    "cobalt", "dynamo", "ember", "fjord", "granite", "harbor",
    "inlet", "jetty", "knoll", "lagoon", "meadow", "nectar",
    "orchard", "pebble", "quarry", "ridge", "slope", "terrace",
    "upland", "vista", "walnut", "yarrow", "zenith", "anchor",
    "beacon", "cipher", "docket", "easel", "fathom", "gazebo",
    "hamlet", "isthmus", "jigsaw", "keel", "loom", "mosaic",
)


def _filler_sentence(rng: random.Random, length: int) -> str:
    words = [rng.choice(_FILLER_WORDS) for _ in range(length)]
    return " ".join(words).capitalize() + "."


def _filler_block(rng: random.Random, sentences: int) -> list[str]:
    return [_filler_sentence(rng, rng.randint(9, 11)) for _ in range(sentences)]


def _chunk(article_id: str, text: str, title: str = "", journal: str = "",
           publish_date: datetime.date | None = None) -> PassageChunk:
    return PassageChunk(chunk_id=f"{article_id}::0000", article_id=article_id,
                        text=text, token_count=len(tokenize(text)),
                        char_start=0, char_end=len(text), title=title,
                        journal=journal, publish_date=publish_date)


def _two_region_gold(rng: random.Random, name: str, answer: str) -> str:
    """A passage whose strongest span region contains no answer tokens while
    a weaker region more than 50 tokens away does, so a single-span reader
    misses the answer that a multi-span reader reaches."""
    display = name.capitalize()
    decoy = (f"Symptoms mark early {name} infection, while symptoms mark "
             "early infection stages.")
    gap = _filler_block(rng, 7)
    carrier = f"{display} fever and night sweats mark early cases."
    echo = f"It was {answer}."
    return " ".join([decoy] + gap + [carrier, echo, _filler_sentence(rng, 10)])


def _clean_gold(rng: random.Random, name: str, answer: str) -> str:
    display = name.capitalize()
    opening = [
        f"{display} spread during winter months according to the archive.",
        f"Surveillance of {name} spread continued while {name} cases rose.",
    ]
    body = _filler_block(rng, 8)
    closing = [f"It was {answer}.", _filler_sentence(rng, 10)]
    return " ".join(opening + body + closing)


def _noisy_gold(rng: random.Random, name: str, answer: str) -> str:
    display = name.capitalize()
    opening = [
        f"Clinicians weighed every treatment for {name} in the registry.",
        f"{display} admissions stayed flat while {name} recovery lagged.",
        f"Wards logged {name} treatment outcomes in the registry.",
    ]
    body = _filler_block(rng, 7)
    closing = [f"It was {answer}.", _filler_sentence(rng, 10)]
    return " ".join(opening + body + closing)


def _distractor(rng: random.Random, index: int) -> str:
    repeated = [
        "Best treatment protocols remain the best treatment choice.",
        "Reviewers called best treatment plans the best treatment standard.",
        "Panels ranked best treatment notes above best treatment logs.",
        "Treatment audits compared treatment summaries with treatment records.",
        "Treatment leaflets and treatment charts list treatment fees.",
    ]
    body = _filler_block(rng, 4)
    tail = f"Entry {index} sits in the quarterly ledger."
    return " ".join(repeated + body + [tail])


def synthetic_corpus() -> tuple[ChunkStore, list[QAPair]]:
    """A 200-chunk corpus with 24 questions.

    Sixteen clean topics are easy for dense retrieval.  Eight noisy topics
    share forty distractor chunks that outscore the gold passage under the
    hashed encoder, so only lexical re-ranking restores them to the top.
    Topic 0 additionally splits its answer evidence across two regions.
    """
    rng = random.Random(93)
    store = ChunkStore()
    pairs: list[QAPair] = []
    for index, (name, answer) in enumerate(zip(_TOPIC_NAMES, _ANSWERS)):
        article_id = f"art-{name}"
        if index == 0:
            question = f"What symptoms mark {name} infection early?"
            text = _two_region_gold(rng, name, answer)
        elif index < _CLEAN_TOPIC_COUNT:
            question = f"How does {name} spread during winter months?"
            text = _clean_gold(rng, name, answer)
        else:
            question = f"What is the best treatment for {name}?"
            text = _noisy_gold(rng, name, answer)
        store.add(_chunk(article_id, text, title=f"Report on {name}",
                         journal="Synthetic Reports"))
        pairs.append(QAPair(question_id=f"q{index:02d}", question=question,
                            answer=answer, article_id=article_id))
    for index in range(_DISTRACTOR_COUNT):
        store.add(_chunk(f"distract-{index:02d}", _distractor(rng, index),
                         title=f"Treatment roundup {index}",
                         journal="Synthetic Reports"))
    filler_count = _TOTAL_CHUNKS - len(_TOPIC_NAMES) - _DISTRACTOR_COUNT
    for index in range(filler_count):
        text = " ".join(_filler_block(rng, 12))
        store.add(_chunk(f"filler-{index:03d}", text,
                         title=f"Archive volume {index}",
                         journal="Synthetic Reports"))
    return store, pairs


def two_topic_chunks() -> ChunkStore:
    """Ten near-duplicate chunks per topic; queries about one topic flood
    plain rankings while clustering still separates the two groups."""
    store = ChunkStore()
    for i in range(10):
        store.add(_chunk(f"mask-{i:04d}", (
            f"Cloth mask filtration and mask mandate compliance study {i} "
            "shows masks cut droplet spread in clinics."
        )))
    for i in range(10):
        store.add(_chunk(f"vent-{i:04d}", (
            f"Ventilation airflow upgrade report {i} shows open windows "
            "and hepa filters cut aerosol spread in classrooms."
        )))
    return store


def service_corpus() -> ChunkStore:
    """Six display-ready documents with titles, journals, and dates; the
    last one is deliberately undated."""
    docs = [
        ("svc-clinical", "Clinical features of early covid pneumonia",
         "Journal of Clinical Virology", datetime.date(2020, 3, 15),
         "Common covid symptoms include fever and dry cough. Many covid "
         "patients also report fatigue and loss of smell. Clinicians track "
         "covid symptoms from the first week of illness. Severe covid cases "
         "add breathlessness to the early symptoms. Recovery timelines vary "
         "widely across covid patients and age groups."),
        ("svc-aerosol", "Aerosol transmission in enclosed spaces",
         "Aerosol Research Letters", datetime.date(2020, 5, 10),
         "Indoor aerosol transmission of covid rises in crowded rooms. Fine "
         "droplets carry covid across poorly ventilated spaces. Opening "
         "windows lowers indoor covid exposure measurably."),
        ("svc-masks", "Mask effectiveness on hospital wards",
         "Hospital Infection Reports", datetime.date(2020, 7, 22),
         "Fitted masks reduce covid spread in hospital wards. Mask "
         "compliance among staff stayed high through the covid winter."),
        ("svc-vaccine", "Antibody response after vaccination",
         "Immunology Digest", datetime.date(2021, 1, 5),
         "Vaccinated adults show strong antibody response against covid. "
         "Booster doses extend covid protection for older adults."),
        ("svc-variant", "Comparative severity of newer variants",
         "Epidemiology Bulletin", datetime.date(2021, 6, 30),
         "Newer covid variants spread faster than the original strain. "
         "Hospitals compared covid variant severity across admission waves."),
        ("svc-seasonal", "Seasonal patterns of respiratory waves",
         "Preprint Archive", None,
         "Seasonal patterns shape covid waves in temperate regions. Winter "
         "gatherings drive covid case counts upward."),
    ]
    store = ChunkStore()
    for article_id, title, journal, publish_date, text in docs:
        store.add(_chunk(article_id, text, title=title, journal=journal,
                         publish_date=publish_date))
    return store
