from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import ContractError

PAD, EOS, START, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "</s>", "<s>", "<unk>")


class Vocabulary:
    """Word-level vocabulary; ids 0-3 are pad, end-of-sequence, decoder-start, unknown."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[:4]) != RESERVED:
            raise ContractError("vocabulary must start with the four reserved tokens")
        if len(set(tokens)) != len(tokens):
            raise ContractError("vocabulary contains duplicate tokens")
        self.tokens = tokens
        self.index = {t: i for i, t in enumerate(tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def id(self, token: str) -> int:
        return self.index.get(token, UNK)

    def encode(self, text: str) -> list[int]:
        return [self.index.get(w, UNK) for w in text.split()]

    def decode(self, ids: Iterable[int]) -> str:
        words = []
        for i in ids:
            i = int(i)
            if i in (PAD, EOS, START):
                continue
            words.append(self.tokens[i])
        return " ".join(words)

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls(Path(path).read_text(encoding="utf-8").splitlines())


def build_vocab(texts: Iterable, max_size: int) -> Vocabulary:
    """Frequency-ranked whitespace vocabulary (ties broken lexicographically).

    ``texts`` may be a :class:`Corpus`, reviews, or plain strings.
    """
    if max_size < 5:
        raise ContractError(f"max_size must be at least 5, got {max_size}")
    counts: Counter[str] = Counter()
    for item in texts:
        counts.update(getattr(item, "text", item).split())
    for tok in RESERVED:
        counts.pop(tok, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(list(RESERVED) + [w for w, _ in ranked[: max_size - len(RESERVED)]])


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    return vocab.encode(text)


def detokenize(ids: Iterable[int], vocab: Vocabulary) -> str:
    return vocab.decode(ids)
