"""Word-level vocabulary over the caption grammar and prompt pool."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import TokenIndexError

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIALS = ("<pad>", "<bos>", "<eos>", "<unk>")

CAPTION_WORDS = (
    "a", "red", "green", "blue", "yellow", "white", "square", "circle", "triangle",
    "moves", "left", "right", "up", "down",
)
PROMPT_WORDS = (
    "what", "is", "this", "video", "about", "?", "happens", "in", "the", "can", "you",
    "describe", "detail", ".", "do", "see", "clip", "summarize", "tell", "me", "please",
    "caption", "like", "who", "are", "where", "from",
)
FILLER_WORDS = (
    "shape", "object", "moving", "color", "frame", "scene", "and", "it", "an", "of", "on",
    "to", "with", "there", "show", "shows", "how", "does", "which",
)

DEFAULT_PROMPT = "What is this video about?"
TRAIN_PROMPTS = (
    "What is this video about?",
    "What happens in the video?",
    "Can you describe the video in detail?",
    "Describe the video.",
    "What do you see in this clip?",
    "Summarize the video.",
    "Tell me about this video.",
    "Please caption this video.",
)
# built from the same words but never shown in training; used for transfer checks
HELDOUT_PROMPTS = (
    "Tell me what happens in the clip.",
    "What can you see in the video?",
)

_TOKEN_RE = re.compile(r"[a-z]+|[?.!,]")
_PUNCT = {"?", ".", "!", ","}


@dataclass(frozen=True)
class TokenSeq:
    """Generated token ids (EOS excluded) and whether EOS ended generation."""

    tokens: tuple[int, ...]
    terminated: bool = False

    def __len__(self) -> int:
        return len(self.tokens)

    def validate(self) -> None:
        if EOS in self.tokens:
            raise ValueError("EOS must not appear inside a TokenSeq")
        seen_pad = False
        for t in self.tokens:
            if t == PAD:
                seen_pad = True
            elif seen_pad:
                raise ValueError("PAD precedes a non-PAD token")


class Vocabulary:
    def __init__(self, words):
        words = list(words)
        if tuple(words[:4]) != SPECIALS:
            raise ValueError("vocabulary must start with <pad>, <bos>, <eos>, <unk>")
        if len(set(words)) != len(words):
            raise ValueError("duplicate vocabulary entries")
        if len(words) < 8:
            raise ValueError("vocabulary needs at least 8 entries")
        self.words = tuple(words)
        self.index = {w: i for i, w in enumerate(self.words)}

    @classmethod
    def default(cls) -> "Vocabulary":
        return cls(SPECIALS + CAPTION_WORDS + PROMPT_WORDS + FILLER_WORDS)

    def __len__(self) -> int:
        return len(self.words)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.words == other.words

    pad, bos, eos, unk = PAD, BOS, EOS, UNK

    def tokenize(self, text: str) -> list[str]:
        return _TOKEN_RE.findall(text.lower())

    def encode(self, text: str) -> list[int]:
        return [self.index.get(w, UNK) for w in self.tokenize(text)]

    def encode_prompt(self, prompt) -> list[int]:
        """Prompt ids followed by the BOS answer delimiter."""
        ids = self.encode(prompt) if isinstance(prompt, str) else list(prompt)
        if not ids or ids[-1] != BOS:
            ids = ids + [BOS]
        return ids

    def decode(self, ids) -> str:
        out = []
        for i in ids:
            if i < 0 or i >= len(self.words):
                raise TokenIndexError(f"token id {i} outside vocabulary of {len(self.words)}")
            if i in (PAD, BOS, EOS):
                continue
            w = self.words[i]
            if w in _PUNCT and out:
                out[-1] += w
            else:
                out.append(w)
        return " ".join(out)
