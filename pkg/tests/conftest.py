import numpy as np
import pytest


def planted_corpus(n_tokens=10_000, n_pairs=5, seed=0):
    """Sentences where a{i} and b{i} appear in the same context frames and nowhere else.

    Half of the sentences are frames ``c c X c c`` whose context words are
    specific to pair i and whose centre is a{i} or b{i} at random; the rest
    are filler sentences over 60 unrelated words.
    """
    rng = np.random.default_rng(seed)
    filler = [f"f{i}" for i in range(60)]
    pairs = [(f"a{i}", f"b{i}") for i in range(n_pairs)]
    frames = [[f"c{i}_{j}" for j in range(6)] for i in range(n_pairs)]
    sents, count = [], 0
    while count < n_tokens:
        if rng.random() < 0.5:
            i = rng.integers(n_pairs)
            ctx = list(rng.choice(frames[i], 4, replace=False))
            s = ctx[:2] + [pairs[i][rng.integers(2)]] + ctx[2:]
        else:
            s = list(rng.choice(filler, 5))
        sents.append(s)
        count += len(s)
    return sents, pairs


@pytest.fixture(scope="session")
def planted():
    return planted_corpus()


def separable_text_dataset(n=200, seed=0, pos_rate=0.35, noise=0.1):
    """Tweets of neutral filler plus one polar word, with occasional contradicting words."""
    rng = np.random.default_rng(seed)
    posw = ["جميل", "رائع", "ممتاز", "حلو", "سعيد"]
    negw = ["سيئ", "قبيح", "رديء", "مزعج", "حزين"]
    neu = ["في", "من", "على", "هذا", "الى", "كان", "يوم", "ناس", "بيت", "شارع"]
    texts, labels = [], []
    for _ in range(n):
        y = int(rng.random() < pos_rate)
        words = list(rng.choice(neu, 6)) + [rng.choice(posw if y else negw)]
        if rng.random() < noise:
            words.append(rng.choice(negw if y else posw))
        rng.shuffle(words)
        texts.append(" ".join(words))
        labels.append(y)
    return texts, np.array(labels), posw, negw


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
