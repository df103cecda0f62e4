"""Question-text utilities shared by reduction, the categorizer and the
lexical baseline: wh-word location, yes/no detection, stopwords."""

WH_WORDS = ("what", "which", "who", "whom", "whose", "when", "where", "why", "how")

# Auxiliaries that open a yes/no question.
YESNO_OPENERS = frozenset(
    "are is was were do does did have has had can could will would".split()
)

STOPWORDS = frozenset(
    """a an the and or of in on at to for from by with as is are was were be been
    being do does did have has had this that these those it its his her their
    there here not no if then than so very own same s t""".split()
)


def first_wh_index(tokens: list[str]) -> int | None:
    """Index of the first token whose lowercase form begins with a wh-word."""
    for i, token in enumerate(tokens):
        low = token.lower()
        if low.startswith(WH_WORDS):
            return i
    return None


def is_yesno_question(question: str) -> bool:
    tokens = question.split()
    return bool(tokens) and tokens[0].lower() in YESNO_OPENERS


def reduce_question(question: str) -> str:
    """Truncate a question to five tokens starting at its wh-word.

    Returns the first whitespace token beginning with a wh-word plus the
    following four tokens (fewer if the question ends first). Questions
    without a wh-word fall back to their first five tokens.
    """
    tokens = question.split()
    wh = first_wh_index(tokens)
    start = 0 if wh is None else wh
    return " ".join(tokens[start:start + 5])


def content_tokens(question: str) -> list[str]:
    """Lowercased question tokens with stopwords and bare punctuation removed."""
    from hopcheck.metrics import normalize_answer

    return [t for t in normalize_answer(question).split() if t not in STOPWORDS]
