"""Per-agent dual-track memory.

Two tracks are collected and stored separately and only meet at prompt
time: the interaction track holds user-agent exchanges, the life track
holds everything the agent does on its own (journeys, arrivals,
activities, conversations with other agents). Each track keeps a
short-term event buffer that is compressed into one abstract long-term
summary whenever it reaches the threshold, consuming exactly the oldest
`threshold` events.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .errors import PreconditionError, TrackMismatchError

INTERACTION = "interaction"
LIFE = "life_space"
TRACKS = (INTERACTION, LIFE)

KIND_TO_TRACK = {
    "movement": LIFE,
    "arrival": LIFE,
    "activity": LIFE,
    "agent_dialogue": LIFE,
    "user_exchange": INTERACTION,
}

DEFAULT_THRESHOLD = 10


@dataclass(frozen=True)
class MemoryEvent:
    seq: int
    tick: int
    track: str
    kind: str
    text: str
    participants: tuple[str, ...] = ()


@dataclass(frozen=True)
class LongTermSummary:
    seq_range: tuple[int, int]
    track: str
    text: str

    def span(self) -> int:
        return self.seq_range[1] - self.seq_range[0] + 1


@dataclass
class MemoryStore:
    agent_ref: str
    threshold: int = DEFAULT_THRESHOLD
    short_term: dict[str, list[MemoryEvent]] = field(
        default_factory=lambda: {track: [] for track in TRACKS}
    )
    long_term: dict[str, list[LongTermSummary]] = field(
        default_factory=lambda: {track: [] for track in TRACKS}
    )
    next_seq: dict[str, int] = field(default_factory=lambda: {track: 1 for track in TRACKS})

    def recorded(self, track: str) -> int:
        """Total events ever recorded on a track."""
        return self.next_seq[track] - 1


@dataclass(frozen=True)
class ContextBundle:
    """Everything injected into a prompt, in fixed section order."""

    long_term_interaction: tuple[LongTermSummary, ...]
    long_term_life: tuple[LongTermSummary, ...]
    recent_interaction: tuple[MemoryEvent, ...]
    recent_life: tuple[MemoryEvent, ...]

    def life_items_total(self) -> int:
        """Life events accumulated over the agent's whole run (compressed or not)."""
        return sum(s.span() for s in self.long_term_life) + len(self.recent_life)


def draft_event(kind: str, text: str, participants: Sequence[str] = (), tick: int = 0) -> MemoryEvent:
    """Event with the track inferred from its kind; seq is assigned on record."""
    if kind not in KIND_TO_TRACK:
        raise PreconditionError(f"unknown memory event kind '{kind}'")
    return MemoryEvent(
        seq=0,
        tick=tick,
        track=KIND_TO_TRACK[kind],
        kind=kind,
        text=text,
        participants=tuple(participants),
    )


def record_event(store: MemoryStore, event: MemoryEvent) -> MemoryStore:
    """Append the event to its track's short-term buffer, assigning the next seq."""
    expected = KIND_TO_TRACK.get(event.kind)
    if expected is None:
        raise TrackMismatchError(f"unknown memory event kind '{event.kind}'")
    if event.track != expected:
        raise TrackMismatchError(
            f"kind '{event.kind}' belongs to track '{expected}', not '{event.track}'"
        )
    if not event.text:
        raise PreconditionError("memory event text must be non-empty")
    seq = store.next_seq[event.track]
    store.next_seq[event.track] = seq + 1
    store.short_term[event.track].append(replace(event, seq=seq))
    return store


Summarizer = Callable[[list[MemoryEvent]], str]


def maybe_compress(store: MemoryStore, summarizer: Summarizer) -> tuple[MemoryStore, list[str]]:
    """Compress every full buffer: one summary per `threshold` oldest events.

    Repeats per track until its buffer is below the threshold. If the
    summarizer raises, the store is left untouched and the error
    propagates; the same events are retried on the next cycle. Returns the
    track tag once per summary created.
    """
    planned: list[tuple[str, list[MemoryEvent], str]] = []
    for track in TRACKS:
        buffer = store.short_term[track]
        offset = 0
        while len(buffer) - offset >= store.threshold:
            batch = buffer[offset : offset + store.threshold]
            planned.append((track, batch, summarizer(batch)))
            offset += store.threshold

    compressed: list[str] = []
    for track, batch, text in planned:
        del store.short_term[track][: len(batch)]
        store.long_term[track].append(
            LongTermSummary(seq_range=(batch[0].seq, batch[-1].seq), track=track, text=text)
        )
        compressed.append(track)
    return store, compressed


def assemble_context(store: MemoryStore) -> ContextBundle:
    """Snapshot of both tracks' summaries and current short-term events."""
    return ContextBundle(
        long_term_interaction=tuple(store.long_term[INTERACTION]),
        long_term_life=tuple(store.long_term[LIFE]),
        recent_interaction=tuple(store.short_term[INTERACTION]),
        recent_life=tuple(store.short_term[LIFE]),
    )


SECTION_HEADERS = (
    "## Past (shared with user)",
    "## Past (own life)",
    "## Recent (shared with user)",
    "## Recent (own life)",
)


def render_context(bundle: ContextBundle) -> str:
    """Deterministic prompt text: four labelled sections, one line per item."""
    sections = (
        bundle.long_term_interaction,
        bundle.long_term_life,
        bundle.recent_interaction,
        bundle.recent_life,
    )
    lines: list[str] = []
    for header, items in zip(SECTION_HEADERS, sections):
        lines.append(header)
        for item in items:
            lines.append(f"- {item.text}")
    return "\n".join(lines)
