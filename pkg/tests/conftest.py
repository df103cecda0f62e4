"""Shared fixtures: the ten-paragraph bridge example, synthetic datasets,
and corpus helpers."""

import json

import pytest

from hopcheck.data import Paragraph, QAExample

BONOBO_QUESTION = (
    "What is the former name of the animal whose habitat the "
    "Réserve Naturelle Lomako Yokokala was established to protect?"
)
BONOBO_ANSWER = "pygmy chimpanzee"
BONOBO_ID = "bridge-bonobo-0001"


def bonobo_record() -> dict:
    """Ten-paragraph bridge record: an animal paragraph, the reserve that
    protects it, and eight other nature-reserve paragraphs."""
    context = [
        ["Bonobo", [
            "The bonobo (\"Pan paniscus\"), formerly called the pygmy chimpanzee "
            "and less often the dwarf or gracile chimpanzee, is an endangered great "
            "ape and one of the two species making up the genus \"Pan\".",
            " Although the name \"chimpanzee\" is sometimes used to refer to both "
            "species together, it is usually understood as referring to the common chimpanzee.",
        ]],
        ["Carrière des Nerviens Regional Nature Reserve", [
            "The Carrière des Nerviens Regional Nature Reserve is a protected area "
            "in the Nord-Pas-de-Calais region of northern France.",
            " It was established on 25 May 2009 to protect a site containing rare plants.",
        ]],
        ["Céreste", [
            "Céreste is a commune in the Alpes-de-Haute-Provence department in "
            "southeastern France.",
            " It is known for its rich fossil beds in fine layers of limestone, now "
            "protected by the Parc naturel régional du Luberon.",
        ]],
        ["Grand Cote National Wildlife Refuge", [
            "The Grand Cote National Wildlife Refuge was established in 1989 as part "
            "of the North American Waterfowl Management Plan.",
            " It is a 6000 acre reserve located in Avoyelles Parish, near Marksville, "
            "Louisiana, in the United States.",
        ]],
        ["Lomako Forest Reserve", [
            "The Lomako Forest Reserve is found in Democratic Republic of the Congo.",
            " It was established in 1991 especially to protect the habitat of the Bonobo apes.",
            " This site covers 3,601.88 km2.",
        ]],
        ["Guadeloupe National Park", [
            "Guadeloupe National Park is a national park in Guadeloupe, an overseas "
            "department of France located in the Leeward Islands.",
            " The Grand Cul-de-Sac Marin Nature Reserve is a marine protected area "
            "adjacent to the park.",
        ]],
        ["La Désirade National Nature Reserve", [
            "La Désirade National Nature Reserve is a reserve in Désirade Island in Guadeloupe.",
            " Established in 2011 for its special geological features, it has an area of 62 ha.",
        ]],
        ["La Tortue", [
            "La Tortue ou l'Ecalle or Ile Tortue is a small rocky islet off the "
            "northeastern coast of Saint Barthélemy in the Caribbean.",
            " Its highest point is 35 m above sea level.",
        ]],
        ["Nature Reserve of Saint Bartholomew", [
            "Nature Reserve of Saint Bartholomew is a nature reserve of Saint "
            "Barthélemy, French West Indies, an overseas collectivity of France.",
        ]],
        ["Ile Fourchue", [
            "Ile Fourchue, also known as Ile Fourche, is an island between "
            "Saint-Barthélemy and Saint Martin.",
            " The island is privately owned and its highest point is 103 meters above sea level.",
        ]],
    ]
    return {
        "_id": BONOBO_ID,
        "question": BONOBO_QUESTION,
        "answer": BONOBO_ANSWER,
        "type": "bridge",
        "level": "medium",
        "supporting_facts": [["Bonobo", 0], ["Lomako Forest Reserve", 1]],
        "context": context,
    }


def record_to_example(record: dict) -> QAExample:
    return QAExample(
        id=record["_id"],
        question=record["question"],
        answer=record["answer"],
        qtype=record["type"],
        level=record.get("level", ""),
        supporting_facts=tuple((t, i) for t, i in record["supporting_facts"]),
        context=tuple(
            Paragraph(title=t, sentences=tuple(s)) for t, s in record["context"]
        ),
    )


def synth_record(i: int, qtype: str = "bridge") -> dict:
    """Synthetic ten-paragraph example with a distinctive vocabulary.

    The answer appears verbatim only in the first gold paragraph, so the
    oracle scorer and the study harness behave predictably.
    """
    subject_title = f"Subject {i}"
    landmark_title = f"Landmark {i}"
    answer = f"answer{i}a answer{i}b"
    if qtype == "comparison":
        question = f"Are Subject {i} and Landmark {i} both within region{i}?"
        answer = "yes"
    else:
        question = f"What is the common name of the subject of record{i} found near landmark{i}?"
    context = [
        [subject_title, [
            f"The subject of record{i} is commonly called {answer}." if qtype == "bridge"
            else f"Subject {i} covers record{i} and sits within region{i}.",
            f" It is found in the area around landmark{i}.",
        ]],
        [landmark_title, [
            f"Landmark{i} marks the edge of the record{i} territory.",
            f" Travellers reach it through region{i}.",
        ]],
    ]
    for j in range(8):
        context.append([
            f"Filler {i} {j}",
            [f"Filler article {j} covers area{i}x{j} and mentions fact{j}.",
             f" It also notes item{j} of zone{i}."],
        ])
    return {
        "_id": f"synth-{qtype}-{i:04d}",
        "question": question,
        "answer": answer,
        "type": qtype,
        "level": "easy",
        "supporting_facts": [[subject_title, 0], [landmark_title, 0]],
        "context": context,
    }


def synth_dataset(n: int = 20, comparison_every: int = 0) -> list[dict]:
    records = []
    for i in range(n):
        qtype = "comparison" if comparison_every and i % comparison_every == 0 else "bridge"
        records.append(synth_record(i, qtype))
    return records


def write_dataset(records: list[dict], path) -> None:
    path.write_text(json.dumps(records, ensure_ascii=False), encoding="utf-8")


def corpus_from_records(records: list[dict]) -> list[tuple[str, str, str]]:
    """(doc_id, title, text) per context paragraph, keyed by title."""
    corpus = []
    seen = set()
    for record in records:
        for title, sentences in record["context"]:
            if title in seen:
                continue
            seen.add(title)
            corpus.append((title, title, "".join(sentences)))
    return corpus


def write_corpus(corpus: list[tuple[str, str, str]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, title, text in corpus:
            fh.write(json.dumps({"doc_id": doc_id, "title": title, "text": text},
                                ensure_ascii=False) + "\n")


@pytest.fixture
def bonobo_example() -> QAExample:
    return record_to_example(bonobo_record())


@pytest.fixture
def bonobo_dataset_file(tmp_path):
    path = tmp_path / "bonobo.json"
    write_dataset([bonobo_record()], path)
    return path


@pytest.fixture
def synth_examples() -> list[QAExample]:
    return [record_to_example(r) for r in synth_dataset(20)]


@pytest.fixture
def synth_dataset_file(tmp_path):
    path = tmp_path / "synth.json"
    write_dataset(synth_dataset(20), path)
    return path
