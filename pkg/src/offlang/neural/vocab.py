"""Whitespace-token vocabulary and tokenizer for randomly initialized models.

Index 0 is padding, 1 the out-of-vocabulary token, 2 the leading
classification token.  Fitting orders terms by descending corpus
frequency (ties alphabetical) so a size cap keeps the most common terms
and the mapping is deterministic.
"""

from __future__ import annotations

from collections import Counter

import torch

from ..errors import IoFailure

PAD_INDEX = 0
UNK_INDEX = 1
CLS_INDEX = 2
_SPECIALS = ("<pad>", "<unk>", "<cls>")


class WhitespaceVocab:
    def __init__(self, tokens: list[str]):
        # tokens excludes the specials; full index space is specials + tokens
        self.tokens = list(tokens)
        self.token_to_index = {tok: i + len(_SPECIALS) for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens) + len(_SPECIALS)

    @classmethod
    def fit(cls, texts, max_size: int | None = None) -> "WhitespaceVocab":
        counts = Counter(tok for text in texts for tok in text.split())
        ordered = sorted(counts, key=lambda t: (-counts[t], t))
        if max_size is not None:
            ordered = ordered[: max(0, max_size - len(_SPECIALS))]
        return cls(ordered)

    def encode(self, text: str, max_len: int) -> list[int]:
        """Leading classification token + token ids, truncated to max_len."""
        ids = [CLS_INDEX]
        for tok in text.split()[: max_len - 1]:
            ids.append(self.token_to_index.get(tok, UNK_INDEX))
        return ids

    def encode_batch(self, texts, max_len: int) -> tuple[torch.Tensor, torch.Tensor]:
        """Padded id matrix plus attention mask (1 = real token)."""
        encoded = [self.encode(t, max_len) for t in texts]
        width = max((len(e) for e in encoded), default=1)
        ids = torch.full((len(encoded), width), PAD_INDEX, dtype=torch.long)
        mask = torch.zeros((len(encoded), width), dtype=torch.long)
        for row, seq in enumerate(encoded):
            ids[row, : len(seq)] = torch.tensor(seq, dtype=torch.long)
            mask[row, : len(seq)] = 1
        return ids, mask

    def save(self, path) -> None:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                for tok in _SPECIALS:
                    fh.write(tok + "\n")
                for tok in self.tokens:
                    fh.write(tok + "\n")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "WhitespaceVocab":
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        if tuple(lines[: len(_SPECIALS)]) != _SPECIALS:
            raise IoFailure(f"{path} is not a vocabulary file")
        return cls(lines[len(_SPECIALS):])
