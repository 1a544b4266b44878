"""Domain-description generation: a two-turn language-model dialogue that
summarizes sampled captions into at most ten class-agnostic prompt templates,
plus template instantiation and the instruction-syntax rewrite."""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from alia.errors import (
    EmptyDescriptionsError,
    PreconditionError,
    RetryableError,
    TranscriptMismatchError,
)
from alia.ids import text_hash

log = logging.getLogger(__name__)

PLACEHOLDER = "{ }"

SUMMARIZE_PROMPT = (
    "I have a set of image captions that I want to summarize into objective "
    "descriptions that describe the scenes, actions, camera pose, zoom, and "
    "other image qualities present. My captions are [CAPTIONS]. I want the "
    "output to be a handful of captions that describe a unique setting, of "
    "the form [PREFIX]"
)

REFINE_PROMPT = (
    "Can you modify your response so each caption is agnostic of the type of "
    "[SUPERCLASS]. Please output less than 10 captions which cover the "
    "largest breadth of concepts."
)

MAX_DESCRIPTIONS = 10


@dataclass
class Message:
    role: str  # "user" or "assistant"
    content: str

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass
class Conversation:
    """Ordered dialogue state; the LLM client itself stays stateless."""

    messages: list[Message] = field(default_factory=list)

    def last_reply(self) -> str:
        for msg in reversed(self.messages):
            if msg.role == "assistant":
                return msg.content
        raise PreconditionError("conversation has no assistant reply yet")

    def to_json(self) -> list[dict]:
        return [m.to_dict() for m in self.messages]


class LanguageModelClient(Protocol):
    def send(self, messages: Sequence[Message]) -> str: ...


@dataclass
class RetryPolicy:
    """Backoff contract for transport failures: exponential delay, capped attempts."""

    max_attempts: int = 3
    backoff_base: float = 0.5
    sleep: object = time.sleep

    def send(self, llm: LanguageModelClient, messages: Sequence[Message]) -> str:
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                return llm.send(messages)
            except RetryableError as exc:
                last = exc
                if attempt + 1 < self.max_attempts:
                    self.sleep(self.backoff_base * (2**attempt))
        raise RetryableError(
            f"language model failed after {self.max_attempts} attempts: {last}"
        )


def serialize_captions(captions: Sequence[str]) -> str:
    """The exact [CAPTIONS] serialization sent to the model, logged verbatim:
    a bracketed list of single-quoted captions."""
    return "[" + ", ".join("'" + c.replace("'", "\\'") + "'" for c in captions) + "]"


def summarize_captions(
    captions: Sequence[str],
    prefix: str,
    llm: LanguageModelClient,
    *,
    retry: RetryPolicy | None = None,
) -> Conversation:
    """First dialogue turn: send the caption-summarization prompt verbatim.

    Returns the conversation (prompt plus raw reply) so the caller can log it
    and continue with the refinement turn. No post-editing happens here.
    """
    if not captions:
        raise PreconditionError("captions must be non-empty")
    prompt = SUMMARIZE_PROMPT.replace(
        "[CAPTIONS]", serialize_captions(captions)
    ).replace("[PREFIX]", prefix)
    conversation = Conversation([Message("user", prompt)])
    retry = retry or RetryPolicy()
    reply = retry.send(llm, conversation.messages)
    conversation.messages.append(Message("assistant", reply))
    return conversation


@dataclass(frozen=True)
class DomainDescription:
    """A class-agnostic prompt template with one ``{ }`` class slot."""

    id: str
    template: str
    prefix: str
    instruction_template: str | None = None
    source: str = "alia-generated"

    def __post_init__(self) -> None:
        if self.template.count(PLACEHOLDER) != 1:
            raise PreconditionError(
                f"template must contain the placeholder exactly once: {self.template!r}"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "template": self.template,
            "prefix": self.prefix,
            "instruction_template": self.instruction_template,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DomainDescription":
        return cls(
            id=data["id"],
            template=data["template"],
            prefix=data["prefix"],
            instruction_template=data.get("instruction_template"),
            source=data.get("source", "alia-generated"),
        )


def make_description(
    template: str,
    prefix: str,
    source: str = "alia-generated",
    instruction_template: str | None = None,
) -> DomainDescription:
    return DomainDescription(
        id=text_hash(template),
        template=template,
        prefix=prefix,
        instruction_template=instruction_template,
        source=source,
    )


def is_class_agnostic(template: str, class_names: Sequence[str]) -> bool:
    lowered = template.lower()
    return not any(name.lower() in lowered for name in class_names if name)


_LIST_MARKER = re.compile(r"^\s*(?:[-*•]|\(?\d+[.)])\s*")


def _strip_reply_line(line: str) -> str:
    line = _LIST_MARKER.sub("", line.strip())
    return line.strip("\"'").strip()


def placeholderize(
    line: str, superclass: str, keep_superclass_word: bool = True
) -> str | None:
    """Insert the class placeholder at the superclass mention.

    The slot goes directly after the article preceding the superclass word.
    Some datasets keep the noun after the slot ("a { } bird"), others replace
    it outright ("a { }" for animal classes whose names are themselves nouns);
    ``keep_superclass_word`` selects between the two. Returns None when the
    line offers no article+superclass site to rewrite.
    """
    if line.count(PLACEHOLDER) == 1:
        return line
    pattern = re.compile(
        r"\b(a|an|the)\s+" + re.escape(superclass) + r"\b", re.IGNORECASE
    )
    match = pattern.search(line)
    if match is None:
        return None
    article = "A" if match.group(1)[0].isupper() else "a"
    if keep_superclass_word:
        replacement = f"{article} {PLACEHOLDER} {superclass}"
    else:
        replacement = f"{article} {PLACEHOLDER}"
    return line[: match.start()] + replacement + line[match.end() :]


def refine_descriptions(
    conversation: Conversation,
    superclass: str,
    llm: LanguageModelClient,
    *,
    class_names: Sequence[str],
    prefix: str,
    keep_superclass_word: bool = True,
    retry: RetryPolicy | None = None,
) -> list[DomainDescription]:
    """Second dialogue turn: ask for class-agnostic captions and parse them.

    Reply parsing is deliberately lenient (one description per line, list
    markers and quotes stripped); lines that cannot take a placeholder or
    that mention a class name are dropped with a diagnostic, and anything
    beyond ten valid descriptions is cut. An empty result is an error the
    operator resolves through the review UI.
    """
    conversation.last_reply()  # precondition: summarize reply present
    prompt = REFINE_PROMPT.replace("[SUPERCLASS]", superclass)
    conversation.messages.append(Message("user", prompt))
    retry = retry or RetryPolicy()
    reply = retry.send(llm, conversation.messages)
    conversation.messages.append(Message("assistant", reply))

    descriptions: list[DomainDescription] = []
    for raw in reply.splitlines():
        line = _strip_reply_line(raw)
        if not line:
            continue
        template = placeholderize(line, superclass, keep_superclass_word)
        if template is None:
            log.warning("dropping reply line without a class slot: %r", line)
            continue
        if not is_class_agnostic(template, class_names):
            log.warning("dropping class-specific description: %r", template)
            continue
        descriptions.append(make_description(template, prefix))
        if len(descriptions) == MAX_DESCRIPTIONS:
            break

    if not descriptions:
        raise EmptyDescriptionsError(
            "language-model reply yielded no valid domain descriptions"
        )
    return descriptions


def instantiate_prompt(desc: DomainDescription, class_name: str) -> str:
    """Fill the class slot; every other byte of the template is untouched."""
    if not class_name:
        raise PreconditionError("class_name must be non-empty")
    return desc.template.replace(PLACEHOLDER, class_name, 1)


@dataclass(frozen=True)
class InstructionRewrite:
    """Instruction-syntax form of a description, for instruction-style editors.

    Mechanical rewrites carry ``needs_review=True`` so an operator confirms
    them before editing runs.
    """

    template: str
    needs_review: bool


def to_instruction(desc: DomainDescription) -> InstructionRewrite:
    """Instruction template: explicit one if present, else the mechanical
    rewrite '<...> a { } X' -> 'put the { } X', flagged for review."""
    if desc.instruction_template is not None:
        return InstructionRewrite(desc.instruction_template, needs_review=False)
    idx = desc.template.index(PLACEHOLDER)
    remainder = desc.template[idx + len(PLACEHOLDER) :]
    return InstructionRewrite(f"put the {PLACEHOLDER}{remainder}", needs_review=True)


class TranscriptReplayClient:
    """Replays a recorded conversation file; mandatory for tests.

    The file is a JSON list of {role, content} turns. Each ``send`` verifies
    the outgoing user messages match the recording, then returns the next
    assistant turn. The client is stateless between conversations: position
    is derived from the messages the caller passes in.
    """

    def __init__(self, path: Path | str):
        self.turns = [
            Message(t["role"], t["content"])
            for t in json.loads(Path(path).read_text(encoding="utf-8"))
        ]

    def send(self, messages: Sequence[Message]) -> str:
        if len(messages) >= len(self.turns):
            raise TranscriptMismatchError("conversation is longer than the transcript")
        for i, msg in enumerate(messages):
            want = self.turns[i]
            if (msg.role, msg.content) != (want.role, want.content):
                raise TranscriptMismatchError(
                    f"turn {i} diverged from transcript: sent {msg.content[:80]!r}, "
                    f"recorded {want.content[:80]!r}"
                )
        nxt = self.turns[len(messages)]
        if nxt.role != "assistant":
            raise TranscriptMismatchError(
                f"transcript expects a {nxt.role} turn at position {len(messages)}"
            )
        return nxt.content


class ScriptedLlm:
    """Stub language model with canned replies per turn, used by the
    synthetic end-to-end pipeline."""

    def __init__(self, replies: Sequence[str]):
        self.replies = list(replies)

    def send(self, messages: Sequence[Message]) -> str:
        n_user = sum(1 for m in messages if m.role == "user")
        if n_user == 0 or n_user > len(self.replies):
            raise PreconditionError(f"no scripted reply for user turn {n_user}")
        return self.replies[n_user - 1]


def scene_llm(superclass: str, scenes: Sequence[str], refined_count: int = 4) -> ScriptedLlm:
    """Scripted model that proposes one caption per scene, then trims the list
    on refinement, mimicking the two-turn dialogue shape."""
    first = "\n".join(
        f"{i + 1}. a photo of a {superclass} {scene}." for i, scene in enumerate(scenes)
    )
    second = "\n".join(
        f"{i + 1}. a photo of a {superclass} {scene}."
        for i, scene in enumerate(scenes[:refined_count])
    )
    return ScriptedLlm([first, second])
