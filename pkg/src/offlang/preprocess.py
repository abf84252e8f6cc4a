"""Deterministic per-language text normalization.

The pipeline order is fixed: emoji replacement on the raw string, then
tokenization, then consecutive-duplicate collapsing, then stopword and
punctuation filtering, then a single-space join.  Which steps actually
run is controlled by :class:`PreprocessConfig`; ready-made per-language
configs come from :func:`preset`.

Everything here is a pure function over immutable inputs, so calls are
safe from any number of parallel workers.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from importlib import resources

from .corpus import Language
from .errors import OfflangError

_DATA_PACKAGE = "offlang.data"


@dataclass(frozen=True)
class PreprocessConfig:
    replace_emoji: bool = False
    collapse_duplicates: bool = False
    remove_stopwords: bool = False
    remove_punctuation: bool = False
    stopword_set: frozenset[str] = frozenset()
    emoji_lexicon: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.remove_stopwords and not self.stopword_set:
            raise OfflangError("remove_stopwords=True requires a non-empty stopword_set")
        object.__setattr__(
            self, "stopword_set", frozenset(s.casefold() for s in self.stopword_set)
        )
        for emoji_seq, name in self.emoji_lexicon.items():
            if not (name.startswith(":") and name.endswith(":") and name.isascii()):
                raise OfflangError(f"emoji shortname {name!r} must be colon-delimited ASCII")
            if not emoji_seq:
                raise OfflangError("empty emoji sequence in lexicon")


NO_PREPROCESSING = PreprocessConfig()


def replace_emoji(text: str, lexicon: dict[str, str]) -> str:
    """Replace every known emoji sequence with its ``:shortname:``.

    Longest lexicon match wins at each position, so multi-codepoint
    sequences (skin tones, ZWJ families, flags) take precedence over
    their prefixes.  A single space is inserted on either side of the
    shortname only where the neighbouring character is not already
    whitespace; characters outside the lexicon pass through untouched.
    """
    if not lexicon:
        return text
    max_len = max(len(k) for k in lexicon)
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        match = None
        for length in range(min(max_len, n - i), 0, -1):
            candidate = text[i : i + length]
            if candidate in lexicon:
                match = candidate
                break
        if match is None:
            out.append(text[i])
            i += 1
            continue
        if out and not out[-1][-1].isspace():
            out.append(" ")
        out.append(lexicon[match])
        i += len(match)
        if i < n and not text[i].isspace():
            out.append(" ")
    return "".join(out)


def _is_punct_char(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _is_shortname(chunk: str) -> bool:
    if len(chunk) < 3 or not chunk.startswith(":") or not chunk.endswith(":"):
        return False
    inner = chunk[1:-1]
    return bool(inner) and all(c.isalnum() or c in "_+-" for c in inner)


def _kept_whole(chunk: str) -> bool:
    lowered = chunk.lower()
    return (
        chunk.startswith("@")
        or chunk == "URL"
        or lowered.startswith(("http://", "https://", "www."))
        or _is_shortname(chunk)
    )


def tokenize(text: str) -> list[str]:
    """Whitespace tokenization with leading/trailing punctuation split off.

    @-mentions, URL placeholders, and emoji shortnames are kept whole;
    word-internal punctuation (``don't``) is never touched.  Each peeled
    punctuation character becomes its own token, in text order.
    """
    tokens: list[str] = []
    for chunk in text.split():
        if _kept_whole(chunk):
            tokens.append(chunk)
            continue
        leading: list[str] = []
        while chunk and _is_punct_char(chunk[0]):
            leading.append(chunk[0])
            chunk = chunk[1:]
        trailing: list[str] = []
        while chunk and _is_punct_char(chunk[-1]):
            trailing.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(leading)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trailing))
    return tokens


def collapse_consecutive_duplicates(tokens: list[str]) -> list[str]:
    """Reduce each run of identical consecutive tokens to a single token."""
    out: list[str] = []
    for tok in tokens:
        if not out or out[-1] != tok:
            out.append(tok)
    return out


def remove_stopwords_punct(tokens: list[str], cfg: PreprocessConfig) -> list[str]:
    """Drop stopwords (case-folded comparison) and punctuation-only tokens."""
    out = []
    for tok in tokens:
        if cfg.remove_stopwords and tok.casefold() in cfg.stopword_set:
            continue
        if cfg.remove_punctuation and all(_is_punct_char(c) for c in tok):
            continue
        out.append(tok)
    return out


def preprocess(text: str, cfg: PreprocessConfig) -> str:
    """Run the configured normalization steps and re-join with single spaces."""
    if cfg.replace_emoji:
        text = replace_emoji(text, cfg.emoji_lexicon)
    tokens = tokenize(text)
    if cfg.collapse_duplicates:
        tokens = collapse_consecutive_duplicates(tokens)
    if cfg.remove_stopwords or cfg.remove_punctuation:
        tokens = remove_stopwords_punct(tokens, cfg)
    return " ".join(tokens)


# ---------------------------------------------------------------------------
# shipped data files and per-language presets
# ---------------------------------------------------------------------------


def load_emoji_lexicon() -> dict[str, str]:
    """Emoji-to-shortname map from the packaged TSV (``emoji<TAB>shortname``)."""
    lexicon = {}
    text = resources.files(_DATA_PACKAGE).joinpath("emoji_lexicon.tsv").read_text("utf-8")
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        emoji_seq, _, name = line.partition("\t")
        lexicon[emoji_seq] = name
    return lexicon


def load_stopwords(language: Language) -> frozenset[str]:
    """Stopword set from the packaged one-token-per-line list."""
    text = (
        resources.files(_DATA_PACKAGE)
        .joinpath(f"stopwords/{language.value}.txt")
        .read_text("utf-8")
    )
    return frozenset(tok for tok in text.split() if tok and not tok.startswith("#"))


# Per-language recipes chosen on validation F1: Greek strips emoji,
# stopwords, and punctuation; Arabic and Turkish replace emoji and collapse
# duplicate runs; Danish only collapses; English transformer runs use the
# raw text.  The soft-label target-classification model uses collapse +
# stopword + punctuation filtering on English text.
def preset(language: Language, soft_label_model: bool = False) -> PreprocessConfig:
    if soft_label_model:
        return PreprocessConfig(
            collapse_duplicates=True,
            remove_stopwords=True,
            remove_punctuation=True,
            stopword_set=load_stopwords(Language.EN),
        )
    if language is Language.EL:
        return PreprocessConfig(
            replace_emoji=True,
            remove_stopwords=True,
            remove_punctuation=True,
            stopword_set=load_stopwords(Language.EL),
            emoji_lexicon=load_emoji_lexicon(),
        )
    if language in (Language.AR, Language.TR):
        return PreprocessConfig(
            replace_emoji=True,
            collapse_duplicates=True,
            emoji_lexicon=load_emoji_lexicon(),
        )
    if language is Language.DA:
        return PreprocessConfig(collapse_duplicates=True)
    return NO_PREPROCESSING


_PRESET_NAMES = ("none", "language-default", "soft-label")


def preset_by_name(name: str, language: Language) -> PreprocessConfig:
    """Resolve a preset name used in configs and manifests."""
    if name == "none":
        return NO_PREPROCESSING
    if name == "language-default":
        return preset(language)
    if name == "soft-label":
        return preset(language, soft_label_model=True)
    raise OfflangError(f"unknown preprocessing preset {name!r}; expected one of {_PRESET_NAMES}")
