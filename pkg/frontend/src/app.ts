/**
 * Annotation UI: one task at a time, free-text answer, nothing rendered
 * beyond the served payload (paragraphs appear exactly in payload order).
 */

import { ApiError, ParagraphView, StudyClient, TaskPayload } from "./api.js";

const ANNOTATOR_KEY = "hopcheck.annotator";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export class AnnotationApp {
  private task: TaskPayload | null = null;
  private inFlight = false;
  private pendingAnswer = "";

  constructor(
    private readonly root: HTMLElement,
    private readonly client: StudyClient,
    private readonly session: Storage,
  ) {}

  get annotator(): string | null {
    return this.session.getItem(ANNOTATOR_KEY);
  }

  start(): void {
    if (this.annotator) {
      void this.loadNext();
    } else {
      this.renderLogin();
    }
  }

  private clear(): void {
    this.root.replaceChildren();
  }

  private renderLogin(): void {
    this.clear();
    const box = el("div", "login-screen");
    box.appendChild(el("h1", "app-title", "Reading study"));
    box.appendChild(
      el("p", "login-hint", "Enter your annotator id to begin. It is kept for this session only."),
    );
    const input = el("input", "annotator-input");
    input.type = "text";
    input.placeholder = "annotator id";
    const button = el("button", "login-button", "Start");
    button.disabled = true;
    input.addEventListener("input", () => {
      button.disabled = input.value.trim().length === 0;
    });
    button.addEventListener("click", () => {
      const value = input.value.trim();
      if (!value) {
        return;
      }
      this.session.setItem(ANNOTATOR_KEY, value);
      void this.loadNext();
    });
    box.appendChild(input);
    box.appendChild(button);
    this.root.appendChild(box);
  }

  async loadNext(): Promise<void> {
    const annotator = this.annotator;
    if (!annotator) {
      this.renderLogin();
      return;
    }
    let task: TaskPayload;
    try {
      task = await this.client.next(annotator);
    } catch (error) {
      // leave whatever was on screen; banner offers a retry
      this.renderRetryBanner(error, () => void this.loadNext());
      return;
    }
    this.task = task;
    if (task.done) {
      this.renderDone(task);
    } else {
      this.renderTask(task);
    }
  }

  private renderRetryBanner(error: unknown, retry: () => void): void {
    const existing = this.root.querySelector(".retry-banner");
    if (existing) {
      existing.remove();
    }
    const banner = el("div", "retry-banner");
    const reason =
      error instanceof ApiError
        ? `The study server answered ${error.status}.`
        : "Could not reach the study server.";
    banner.appendChild(el("span", "retry-message", `${reason} Your answer is kept.`));
    const button = el("button", "retry-button", "Retry");
    button.addEventListener("click", () => {
      banner.remove();
      retry();
    });
    banner.appendChild(button);
    this.root.prepend(banner);
  }

  private renderTask(task: TaskPayload): void {
    this.clear();
    const screen = el("div", "task-screen");

    const header = el("div", "task-header");
    const completed = task.completed ?? 0;
    const total = task.total ?? 0;
    header.appendChild(el("span", "progress-counter", `${completed} / ${total} answered`));
    screen.appendChild(header);

    screen.appendChild(el("h2", "question-text", task.question ?? ""));

    const cards = el("div", "paragraph-list");
    for (const paragraph of task.paragraphs ?? []) {
      cards.appendChild(this.renderParagraph(paragraph));
    }
    screen.appendChild(cards);

    const form = el("div", "answer-form");
    const input = el("input", "answer-input");
    input.type = "text";
    input.placeholder = "your answer";
    input.value = this.pendingAnswer;
    const button = el("button", "submit-button", "Submit answer");
    button.disabled = input.value.trim().length === 0;
    input.addEventListener("input", () => {
      this.pendingAnswer = input.value;
      button.disabled = input.value.trim().length === 0;
    });
    button.addEventListener("click", () => void this.handleSubmit(input, button));
    form.appendChild(input);
    form.appendChild(button);
    screen.appendChild(form);

    this.root.appendChild(screen);
  }

  private renderParagraph(paragraph: ParagraphView): HTMLElement {
    const card = el("section", "paragraph-card");
    card.appendChild(el("h3", "card-title", paragraph.title));
    const body = el("p", "card-body");
    for (const sentence of paragraph.sentences) {
      body.appendChild(el("span", "card-sentence", sentence));
    }
    card.appendChild(body);
    return card;
  }

  private async handleSubmit(input: HTMLInputElement, button: HTMLButtonElement): Promise<void> {
    const annotator = this.annotator;
    const task = this.task;
    const answer = input.value.trim();
    if (!annotator || !task || task.done || !task.question_id || !answer) {
      return;
    }
    if (this.inFlight) {
      return; // one request at a time; double clicks are dropped here
    }
    this.inFlight = true;
    button.disabled = true;
    try {
      await this.client.submit(annotator, task.question_id, answer);
      this.pendingAnswer = "";
      await this.loadNext();
    } catch (error) {
      if (error instanceof ApiError && (error.status === 409 || error.status === 404)) {
        // already answered (duplicate) or stale task: refresh to the real state
        this.pendingAnswer = "";
        await this.loadNext();
      } else {
        // network failure or server error: keep the answer for a retry
        this.pendingAnswer = answer;
        button.disabled = false;
        this.renderRetryBanner(error, () => void this.handleSubmit(input, button));
      }
    } finally {
      this.inFlight = false;
    }
  }

  private renderDone(task: TaskPayload): void {
    this.clear();
    const screen = el("div", "done-screen");
    screen.appendChild(el("h2", "done-title", "All done"));
    const total = task.total ?? 0;
    screen.appendChild(
      el("p", "done-message", `You answered ${task.completed ?? total} of ${total} questions. Thank you!`),
    );
    this.root.appendChild(screen);
  }
}
