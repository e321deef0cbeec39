"""Ranked retrieval entries shared by the dense, lexical, and pipeline stages."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class RankedEntry:
    """One position in a ranked list: which chunk, its score, and which
    stage produced that score ("dense", "bm25+", or "reader")."""

    chunk_id: str
    score: float
    source: str


RankedList = list[RankedEntry]
