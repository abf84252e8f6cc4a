"""Translation-based augmentation of offensive examples.

Offensive-labeled source tweets are translated into the target language
and appended to the target-language training set, raising its offensive
fraction.  Translation goes through a small client interface so the
whole pipeline runs offline against the deterministic stub; the HTTP
client for a real service lives behind the same interface with retries,
backoff, and a requests-per-second cap.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from typing import Protocol

from .corpus import Dataset, HardLabel, Language, TweetRecord, concat_datasets
from .errors import IoFailure, OfflangError, TranslationFailure


class TranslationClient(Protocol):
    name: str

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        """Return a non-empty translation or raise TranslationFailure."""


class StubTranslationClient:
    """Deterministic offline stand-in: prefixes the text with the target tag."""

    name = "stub"

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        return f"[{target_lang}] {text}"


class HttpTranslationClient:
    """Client for an HTTPS translation endpoint.

    The API key comes from the environment (``api_key_env``); requests
    are throttled to ``requests_per_second`` and retried with
    exponential backoff by :func:`translate_dataset`.
    """

    name = "live"

    def __init__(
        self,
        endpoint: str | None = None,
        api_key_env: str = "OFFLANG_TRANSLATE_KEY",
        requests_per_second: float = 5.0,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint or os.environ.get("OFFLANG_TRANSLATE_ENDPOINT", "")
        self.api_key_env = api_key_env
        self.requests_per_second = requests_per_second
        self.timeout = timeout
        self._last_request = 0.0
        if not self.endpoint:
            raise TranslationFailure(
                "no translation endpoint configured; set OFFLANG_TRANSLATE_ENDPOINT "
                "or pass endpoint="
            )
        if not os.environ.get(api_key_env):
            raise TranslationFailure(
                f"no API key found in ${api_key_env}; export it before using the live client"
            )

    def _throttle(self):
        minimum_gap = 1.0 / self.requests_per_second
        elapsed = time.monotonic() - self._last_request
        if elapsed < minimum_gap:
            time.sleep(minimum_gap - elapsed)
        self._last_request = time.monotonic()

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        import requests

        self._throttle()
        try:
            response = requests.post(
                self.endpoint,
                json={"q": text, "source": source_lang, "target": target_lang},
                headers={"Authorization": f"Bearer {os.environ[self.api_key_env]}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
            translated = response.json()["translatedText"]
        except Exception as exc:
            raise TranslationFailure(f"translation request failed: {exc}") from exc
        if not translated:
            raise TranslationFailure("translation service returned empty text")
        return translated


@dataclass(frozen=True)
class AugmentationRecord:
    """Provenance of one translated tweet."""

    original_id: str
    source_language: str
    target_language: str
    translated_text: str
    client: str


@dataclass(frozen=True)
class SkippedRecord:
    original_id: str
    reason: str


@dataclass
class TranslationResult:
    dataset: Dataset
    provenance: list[AugmentationRecord]
    skipped: list[SkippedRecord]


def select_offensive(ds: Dataset) -> Dataset:
    """Subset of records labeled OFF, order and ids preserved."""
    records = tuple(
        rec
        for rec in ds.records
        if isinstance(rec.payload, HardLabel) and rec.payload.value == "OFF"
    )
    return Dataset(records, ds.task, ds.language, f"{ds.provenance} [OFF only]")


def translate_dataset(
    ds: Dataset,
    client: TranslationClient,
    target_lang: Language,
    max_retries: int = 2,
) -> TranslationResult:
    """Translate every record into the target language.

    Labels carry over unchanged; ids get an ``-aug-<lang>`` suffix so a
    later merge cannot collide with source ids.  A record that still
    fails after ``max_retries`` retries is recorded as skipped with its
    reason; the batch never aborts silently.
    """
    if target_lang is ds.language:
        raise OfflangError("target language must differ from the source language")
    records = []
    provenance: list[AugmentationRecord] = []
    skipped: list[SkippedRecord] = []
    for rec in ds.records:
        translated = None
        failure = None
        for _ in range(max_retries + 1):
            try:
                translated = client.translate(rec.text, ds.language.value, target_lang.value)
                break
            except TranslationFailure as exc:
                failure = exc
        if translated is None:
            skipped.append(SkippedRecord(rec.id, str(failure)))
            continue
        new_id = f"{rec.id}-aug-{target_lang.value}"
        records.append(TweetRecord(new_id, translated, target_lang, rec.payload))
        provenance.append(
            AugmentationRecord(
                rec.id, ds.language.value, target_lang.value, translated, client.name
            )
        )
    dataset = Dataset(
        tuple(records), ds.task, target_lang,
        provenance=f"{ds.provenance} translated {ds.language.value}->{target_lang.value}",
    )
    return TranslationResult(dataset, provenance, skipped)


def merge_augmented(base: Dataset, aug: Dataset) -> Dataset:
    """Append translated records to the base training set, base first."""
    return concat_datasets(base, aug)


def write_provenance_log(provenance: list[AugmentationRecord], path) -> None:
    """JSON-lines log, one translated record per line."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in provenance:
                fh.write(
                    json.dumps(
                        {
                            "original_id": rec.original_id,
                            "source_language": rec.source_language,
                            "target_language": rec.target_language,
                            "translated_text": rec.translated_text,
                            "client": rec.client,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_skip_report(skipped: list[SkippedRecord], path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in skipped:
                fh.write(json.dumps({"original_id": rec.original_id, "reason": rec.reason}) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
