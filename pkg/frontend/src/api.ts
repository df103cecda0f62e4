/**
 * HTTP client for the study service.
 *
 * The client only ever touches the two annotator endpoints (next task,
 * submit answer) and only reads the documented TaskView fields; nothing
 * here requests or stores condition information.
 */

export interface ParagraphView {
  title: string;
  sentences: string[];
}

export interface TaskPayload {
  done: boolean;
  question_id?: string;
  question?: string;
  paragraphs?: ParagraphView[];
  completed?: number;
  total?: number;
}

export interface SubmitResponse {
  accepted: boolean;
  question_id: string;
  completed: number;
  total: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") {
      return body.detail;
    }
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `request failed with status ${response.status}`;
}

export class StudyClient {
  constructor(
    private readonly baseUrl: string,
    private readonly studyId: string,
    private readonly fetchImpl: FetchLike,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}/study/${encodeURIComponent(this.studyId)}${path}`;
  }

  async next(annotator: string): Promise<TaskPayload> {
    const response = await this.fetchImpl(
      this.url(`/next?annotator=${encodeURIComponent(annotator)}`),
    );
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as TaskPayload;
  }

  async submit(annotator: string, questionId: string, answer: string): Promise<SubmitResponse> {
    const response = await this.fetchImpl(this.url("/answer"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator, question_id: questionId, answer }),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as SubmitResponse;
  }
}
