"""Conceptual nodes: depth-limited article scraping, corpus scorers, interest classification."""

from __future__ import annotations

import logging
import math
import re
import time
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib.resources import files
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence
from urllib.parse import quote

import requests

from .ads import Advertisement

logger = logging.getLogger(__name__)

NODE_NAMES = ("celebrity", "identity", "news", "organization", "politics", "religion")


@dataclass(frozen=True)
class ConceptNode:
    """One of the six fixed thematic categories, in global index order."""

    name: str
    index: int

    def __post_init__(self):
        if not 0 <= self.index < len(NODE_NAMES) or NODE_NAMES[self.index] != self.name:
            raise ValueError(f"unknown concept node {self.name!r} at index {self.index}")


NODES = tuple(ConceptNode(name, i) for i, name in enumerate(NODE_NAMES))


def node_by_name(name: str) -> ConceptNode:
    try:
        return NODES[NODE_NAMES.index(name)]
    except ValueError:
        raise ValueError(f"unknown concept node {name!r}") from None


_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip everything non-alphanumeric to spaces, split on whitespace."""
    return [t for t in _NON_ALNUM.split(text.lower()) if t]


def char_trigrams(token: str) -> list[str]:
    """Character 3-grams of the token wrapped in start/end sentinels."""
    padded = f"^{token}$"
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


@dataclass(frozen=True)
class Article:
    title: str
    text: str
    links: tuple[str, ...]


class ArticleNotFoundError(LookupError):
    def __init__(self, title: str):
        super().__init__(f"article not found: {title!r}")
        self.title = title


class ArticleSource(Protocol):
    def resolve(self, title: str) -> Article: ...


class FixtureArticleSource:
    """Articles stored as ``<title>.txt`` files in a directory.

    File format: first line ``LINKS: a|b|c`` (the list may be empty),
    remaining lines are the article text. UTF-8 throughout.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def resolve(self, title: str) -> Article:
        path = self.root / f"{title}.txt"
        if not path.is_file():
            raise ArticleNotFoundError(title)
        first, _, rest = path.read_text(encoding="utf-8").partition("\n")
        if not first.startswith("LINKS:"):
            raise ValueError(f"article file {path} is missing the LINKS header")
        links = tuple(p.strip() for p in first[len("LINKS:") :].split("|") if p.strip())
        return Article(title, rest.strip(), links)


class HttpArticleSource:
    """JSON-over-HTTP article source with a politeness delay between requests.

    ``url_template`` must contain ``{title}``; the response is JSON with
    ``text`` and ``links`` fields. Requests are issued one at a time, at
    least ``delay`` seconds apart.
    """

    def __init__(
        self,
        url_template: str,
        timeout: float = 10.0,
        delay: float = 0.5,
        session: requests.Session | None = None,
    ):
        if "{title}" not in url_template:
            raise ValueError("url_template must contain '{title}'")
        self.url_template = url_template
        self.timeout = timeout
        self.delay = delay
        self._session = session or requests.Session()
        self._last_request = -math.inf

    def resolve(self, title: str) -> Article:
        wait = self._last_request + self.delay - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        self._last_request = time.monotonic()
        url = self.url_template.format(title=quote(title, safe=""))
        response = self._session.get(url, timeout=self.timeout)
        if response.status_code == 404:
            raise ArticleNotFoundError(title)
        response.raise_for_status()
        doc = response.json()
        return Article(title, str(doc["text"]), tuple(str(l) for l in doc["links"]))


@dataclass
class ScrapeParams:
    """Root article title, recursion depth, and optionally pre-visited titles."""

    root_title: str
    depth: int
    visited: tuple[str, ...] = ()

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if len(set(self.visited)) != len(self.visited):
            raise ValueError("visited titles must be unique")


def collect_titles(source: ArticleSource, params: ScrapeParams) -> list[str]:
    """Depth-limited recursive traversal from the root, in first-visit order.

    Links are followed in document order with a single shared visited set, so
    cycles terminate and already-seen titles are skipped. An unresolvable root
    raises; unresolvable links are skipped with a warning.
    """
    seen: dict[str, None] = dict.fromkeys(params.visited)

    def visit(title: str, depth: int, is_root: bool) -> None:
        if title in seen:
            return
        try:
            article = source.resolve(title)
        except ArticleNotFoundError:
            if is_root:
                raise
            logger.warning("skipping unresolvable article %r", title)
            return
        seen[title] = None
        if depth > 0:
            for link in article.links:
                visit(link, depth - 1, False)

    visit(params.root_title, params.depth, True)
    return list(seen)


def build_corpus(source: ArticleSource, titles: Iterable[str]) -> str:
    """Concatenate article texts in first-visit order, separated by newlines."""
    return "\n".join(source.resolve(title).text for title in titles)


class EmptyTokensError(ValueError):
    """The text contains no tokens after normalization."""


@dataclass(frozen=True, eq=False)
class ConceptScorer:
    """Per-concept corpus model: add-one unigrams with character-trigram backoff.

    Immutable after build; safe to share across concurrent scoring calls.
    """

    concept: ConceptNode
    unigram_counts: Mapping[str, int]
    trigram_counts: Mapping[str, int]
    total_unigrams: int
    total_trigrams: int

    @property
    def unigram_vocab(self) -> int:
        return len(self.unigram_counts)

    @property
    def trigram_vocab(self) -> int:
        return len(self.trigram_counts)


def build_scorer(concept: ConceptNode, corpus: str) -> ConceptScorer:
    """Count unigrams and padded character trigrams of the corpus."""
    tokens = tokenize(corpus)
    if not tokens:
        raise EmptyTokensError(f"corpus for {concept.name!r} has no tokens")
    unigrams = Counter(tokens)
    trigrams = Counter(g for t in tokens for g in char_trigrams(t))
    return ConceptScorer(
        concept, dict(unigrams), dict(trigrams), sum(unigrams.values()), sum(trigrams.values())
    )


def similarity(scorer: ConceptScorer, interest: str) -> float:
    """Mean log-likelihood of the interest's tokens under the scorer's corpus.

    In-vocabulary tokens use the add-one-smoothed unigram probability;
    out-of-vocabulary tokens back off to the mean smoothed trigram
    log-probability of their character trigrams, so every score is finite.
    """
    tokens = tokenize(interest)
    if not tokens:
        raise EmptyTokensError(f"interest {interest!r} has no tokens")
    uni_denom = scorer.total_unigrams + scorer.unigram_vocab
    tri_denom = scorer.total_trigrams + scorer.trigram_vocab
    total = 0.0
    for token in tokens:
        count = scorer.unigram_counts.get(token)
        if count is not None:
            total += math.log((count + 1) / uni_denom)
        else:
            grams = char_trigrams(token)
            backoff = sum(
                math.log((scorer.trigram_counts.get(g, 0) + 1) / tri_denom) for g in grams
            )
            total += backoff / len(grams)
    return total / len(tokens)


def _scorers_in_order(scorers: Sequence[ConceptScorer]) -> tuple[ConceptScorer, ...]:
    by_index: dict[int, ConceptScorer] = {}
    for scorer in scorers:
        if scorer.concept.index in by_index:
            raise ValueError(f"duplicate scorer for {scorer.concept.name!r}")
        by_index[scorer.concept.index] = scorer
    if sorted(by_index) != list(range(len(NODES))):
        raise ValueError("need exactly one scorer per conceptual node")
    return tuple(by_index[i] for i in range(len(NODES)))


def classify_interest(interest: str, scorers: Sequence[ConceptScorer]) -> ConceptNode:
    """Concept whose scorer gives the highest similarity; ties go to the
    lexicographically smallest concept name."""
    best_node = None
    best_score = -math.inf
    # index order coincides with lexicographic name order, so keeping the
    # first maximum implements the tie rule
    for scorer in _scorers_in_order(scorers):
        score = similarity(scorer, interest)
        if score > best_score:
            best_node, best_score = scorer.concept, score
    assert best_node is not None
    return best_node


@dataclass(frozen=True)
class NodeCounts:
    """Per-node interest counts for one ad plus the unclassifiable leftovers."""

    counts: tuple[int, ...]
    skipped: tuple[str, ...] = ()


def count_nodes(ad: Advertisement | Iterable[str], scorers: Sequence[ConceptScorer]) -> NodeCounts:
    """Classify each targeted interest independently and tally per node.

    Interests that tokenize to nothing are recorded under ``skipped`` rather
    than raising, so sum(counts) + len(skipped) == len(interests).
    """
    interests = ad.interests if isinstance(ad, Advertisement) else tuple(ad)
    counts = [0] * len(NODES)
    skipped = []
    for interest in interests:
        try:
            node = classify_interest(interest, scorers)
        except EmptyTokensError:
            skipped.append(interest)
            continue
        counts[node.index] += 1
    return NodeCounts(tuple(counts), tuple(skipped))


def load_corpora(directory: str | Path) -> dict[str, str]:
    """Read ``<node>.txt`` corpus files for all six nodes from a directory."""
    root = Path(directory)
    corpora = {}
    for name in NODE_NAMES:
        path = root / f"{name}.txt"
        if not path.is_file():
            raise FileNotFoundError(f"missing corpus file for node {name!r}: {path}")
        corpora[name] = path.read_text(encoding="utf-8")
    return corpora


def build_scorers(corpora: Mapping[str, str]) -> tuple[ConceptScorer, ...]:
    """One scorer per node from a name → corpus mapping."""
    if set(corpora) != set(NODE_NAMES):
        raise ValueError(f"corpora must cover exactly the nodes {NODE_NAMES}")
    return tuple(build_scorer(node_by_name(name), corpora[name]) for name in NODE_NAMES)


@lru_cache(maxsize=1)
def default_scorers() -> tuple[ConceptScorer, ...]:
    """Scorers built from the bundled per-node corpora."""
    root = files("clickopt") / "data" / "corpora"
    corpora = {name: (root / f"{name}.txt").read_text(encoding="utf-8") for name in NODE_NAMES}
    return build_scorers(corpora)
