"""A seeded synthetic novel corpus dense in explicitly attributed dialogue."""

import random

FIRST = ["Orla", "Tamsin", "Edric", "Hollis", "Maren", "Corwin", "Ysolde", "Bertram", "Linnet", "Osric",
         "Perpetua", "Fenwick", "Rowena", "Galen", "Ismay", "Thaddeus"]
LAST = ["Quennell", "Ashdown", "Marlowe", "Penhallow", "Trevithick", "Vossberg", "Caldecott", "Wetherby"]
WORDS = ("the road was long and the weather cold but we shall go on before the night comes "
         "tell me what you saw near the river when the bells rang").split()
VERBS = ["said", "replied", "answered", "cried", "whispered", "asked"]


def _line(rng):
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(4, 12))).capitalize()


def novel(rng: random.Random, n_utterances: int) -> str:
    cast = [f"{f} {l}" for f, l in zip(rng.sample(FIRST, 6), rng.sample(LAST, 6))]
    paras = ["Chapter 1", "The house on the hill had stood empty for many years."]
    for k in range(n_utterances):
        full = rng.choice(cast)
        name = full if rng.random() < 0.5 else full.split()[0]
        verb = rng.choice(VERBS)
        if rng.random() < 0.5:
            paras.append(f'"{_line(rng)}," {verb} {name}.')
        else:
            paras.append(f'{name} {verb}, "{_line(rng)}."')
        if k % 5 == 4:
            paras.append("The fire crackled in the grate and the clock ticked on.")
    return "\n\n".join(paras) + "\n"


def write_corpus(directory, n_docs: int, per_doc: int, seed: int = 2024):
    rng = random.Random(seed)
    directory.mkdir(parents=True, exist_ok=True)
    for d in range(n_docs):
        (directory / f"synthetic_{d:02d}.txt").write_text(novel(rng, per_doc), encoding="utf-8")
    return directory
