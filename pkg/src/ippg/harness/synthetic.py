"""Seeded synthetic VQA-style datasets for offline runs of the full pipeline."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .data import Sample, dump_samples

_QUESTIONS = {
    "English": [
        "What is the total amount shown in the chart for the fiscal year? Give the number only.",
        "According to the table, how many units were shipped in the third quarter? Answer with a number.",
        "Read the receipt and report the change returned to the customer, as a number without currency.",
        "Which value appears in the highlighted cell of the balance sheet? Reply with digits only.",
    ],
    "NonEnglish": [
        "¿Cuál es el importe total que muestra el gráfico para el año fiscal? Responda solo con el número.",
        "Wie viele Einheiten wurden laut Tabelle im dritten Quartal versandt? Antworten Sie mit einer Zahl.",
        "Quel est le montant de la monnaie rendue au client sur ce reçu ? Donnez uniquement le nombre.",
    ],
}
_MCQ_SUFFIX = " Options: (A) {a} (B) {b} (C) {c} (D) {d}. Reply with the value of the correct option."
SYSTEM_TEXT = "Answer with a single number and nothing else."


def make_dataset(directory: str | Path, n: int = 20, seed: int = 0, name: str = "samples.jsonl") -> Path:
    """Write ``n`` samples (PNG images plus a JSON-lines index) under ``directory``."""
    directory = Path(directory)
    img_dir = directory / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        w = int(rng.integers(20, 41)) * 16
        h = int(rng.integers(12, 31)) * 16
        pixels = np.full((h, w, 3), 235, dtype=np.uint8)
        for _ in range(int(rng.integers(3, 8))):
            x0, y0 = int(rng.integers(0, w - 8)), int(rng.integers(0, h - 8))
            x1, y1 = int(rng.integers(x0 + 4, w)), int(rng.integers(y0 + 4, h))
            pixels[y0:y1, x0:x1] = rng.integers(0, 256, size=3, dtype=np.uint8)
        path = img_dir / f"s{i:03d}.png"
        Image.fromarray(pixels, "RGB").save(path)

        language = "English" if rng.random() < 0.7 else "NonEnglish"
        qtype = "MCQ" if rng.random() < 0.55 else "OpenEnded"
        answer = int(rng.integers(1, 5000))
        question = _QUESTIONS[language][int(rng.integers(0, len(_QUESTIONS[language])))]
        if qtype == "MCQ":
            options = [answer] + [int(v) for v in rng.integers(1, 5000, size=3)]
            rng.shuffle(options)
            question += _MCQ_SUFFIX.format(a=options[0], b=options[1], c=options[2], d=options[3])
        samples.append(
            Sample(
                id=f"s{i:03d}",
                system_text=SYSTEM_TEXT,
                user_text=question,
                image_paths=(path,),
                ground_truth=str(answer),
                metadata={"language": language, "question_type": qtype},
            )
        )
    return dump_samples(samples, directory / name)
