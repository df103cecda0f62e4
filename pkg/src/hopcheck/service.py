"""HTTP API for the study service.

Payloads are JSON. Task payloads expose only what an annotator may see:
question text and paragraphs, never the condition or the withheld
paragraph (the paragraph count is the only condition-correlated signal,
by design of the protocol itself).
"""

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from hopcheck.study import (
    DuplicateSubmissionError,
    StudyError,
    StudyService,
    TaskView,
    UnknownTaskError,
)


class AnswerRequest(BaseModel):
    annotator: str
    question_id: str
    answer: str


def _task_payload(task: TaskView, completed: int, total: int) -> dict:
    return {
        "done": False,
        "question_id": task.question_id,
        "question": task.question,
        "paragraphs": [
            {"title": p.title, "sentences": list(p.sentences)} for p in task.paragraphs
        ],
        "completed": completed,
        "total": total,
    }


def create_app(service: StudyService, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="hopcheck study service", version="1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def check_study(study_id: str) -> None:
        if study_id != service.study.study_id:
            raise HTTPException(status_code=404, detail=f"unknown study '{study_id}'")

    def completed_count(annotator: str) -> int:
        return sum(1 for s in service.submissions() if s.annotator_id == annotator)

    @app.get("/study/{study_id}/next")
    def next_task(study_id: str, annotator: str = Query(..., min_length=1)):
        check_study(study_id)
        try:
            task = service.next_task(annotator)
        except StudyError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        total = len(service.study.question_ids)
        if task is None:
            return {"done": True, "completed": completed_count(annotator), "total": total}
        return _task_payload(task, completed_count(annotator), total)

    @app.post("/study/{study_id}/answer")
    def submit_answer(study_id: str, request: AnswerRequest):
        check_study(study_id)
        try:
            submission = service.submit_answer(
                request.annotator, request.question_id, request.answer
            )
        except DuplicateSubmissionError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except UnknownTaskError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except StudyError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "accepted": True,
            "question_id": submission.question_id,
            "completed": completed_count(request.annotator),
            "total": len(service.study.question_ids),
        }

    @app.get("/study/{study_id}/results")
    def results(study_id: str):
        check_study(study_id)
        return service.results()

    @app.get("/study/{study_id}/progress")
    def progress(study_id: str):
        check_study(study_id)
        return service.progress()

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
