"""Regenerate the recorded camera-trap conversation fixture.

The transcript pins the exact bytes of both dialogue turns so the replay
client can verify them; rerun this script only when the prompt construction
changes, then re-commit the fixture.
"""

from __future__ import annotations

import json
from pathlib import Path

from alia.captioning import CaptionPool, sample_captions
from alia.prompts import REFINE_PROMPT, SUMMARIZE_PROMPT, serialize_captions

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "camera_trap_transcript.json"

CAPTIONS = [
    "a zebra standing in a grassy field with trees",
    "a large animal in a grassy field with bushes",
    "an animal walking through tall dry grass",
    "a dark photo of an animal in a forest at night",
    "an animal in a forest in the dark",
    "a herd of animals near a large body of water",
    "an animal near a watering hole in a field",
    "an animal walking on a dirt trail",
    "a dirt path with twigs and branches and an animal",
    "an animal crossing a dirt road between bushes",
    "a blurry animal near trees and shrubs",
    "two animals grazing in an open field",
]

PREFIX = "a camera trap photo of an animal"
SUPERCLASS = "animal"

FIRST_REPLY = "\n".join([
    "1. a camera trap photo of a zebra in a grassy field with trees and bushes.",
    "2. a camera trap photo of an animal in a forest in the dark.",
    "3. a camera trap photo of an animal near a large body of water in the middle of a field.",
    "4. a camera trap photo of an animal walking on a dirt trail with twigs and branches.",
    "5. a camera trap photo of an animal grazing in an open field.",
])

REFINED_REPLY = "\n".join([
    "1. a camera trap photo of an animal in a grassy field with trees and bushes.",
    "2. a camera trap photo of an animal in a forest in the dark.",
    "3. a camera trap photo of an animal near a large body of water in the middle of a field.",
    "4. a camera trap photo of an animal walking on a dirt trail with twigs and branches.",
])


def main() -> None:
    pool = CaptionPool.from_captions(CAPTIONS)
    sampled = sample_captions(pool, n=200, seed=0)
    summarize = SUMMARIZE_PROMPT.replace(
        "[CAPTIONS]", serialize_captions(sampled)
    ).replace("[PREFIX]", PREFIX)
    refine = REFINE_PROMPT.replace("[SUPERCLASS]", SUPERCLASS)
    transcript = [
        {"role": "user", "content": summarize},
        {"role": "assistant", "content": FIRST_REPLY},
        {"role": "user", "content": refine},
        {"role": "assistant", "content": REFINED_REPLY},
    ]
    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE.write_text(json.dumps(transcript, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {FIXTURE}")


if __name__ == "__main__":
    main()
