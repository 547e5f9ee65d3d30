/**
 * Typed client for the review service JSON API. All reads and writes in
 * the UI go through this module; nothing touches files directly.
 */

export interface TaskSummary {
    id: string;
    difficulty: string;
    status: string;
    duration: number;
    ops: string[];
    num_ops: number;
    reviewed: boolean;
}

export interface TaskListPage {
    total: number;
    page: number;
    page_size: number;
    tasks: TaskSummary[];
}

export interface ColumnSpec {
    name: string;
    type: string;
}

export interface TableJson {
    name: string;
    columns: ColumnSpec[];
    rows: unknown[][];
}

export interface InstructionRecord {
    draft: string;
    final: string;
    judge: { is_valid: boolean; intent: string };
}

export interface OperatorStep {
    op: string;
    params: Record<string, unknown>;
}

export interface DiffPayload {
    aligned: boolean;
    reason?: string;
    columns?: string[];
    gold_rows?: unknown[][];
    actual_rows?: unknown[][];
    mismatch?: boolean[][];
}

export interface VerdictRecord {
    task_id: string;
    reviewer: string;
    scores: Record<string, number>;
    decision: string;
    timestamp: number;
}

export interface TaskDetail extends TaskSummary {
    instruction: InstructionRecord;
    program: OperatorStep[];
    code: Record<string, string>;
    tables: TableJson[];
    gold_output: TableJson;
    actual: TableJson | null;
    error: string | null;
    diff: DiffPayload;
    verdicts: VerdictRecord[];
}

export interface Stats {
    total: number;
    passing: number;
    success_rate: number | null;
    difficulty: Record<string, number>;
    operators: Record<string, number>;
    avg_duration: number | null;
    reviewed_tasks: number;
    verdicts: number;
    accept_rate: number | null;
    kappa: number | null;
}

export interface VerdictSubmission {
    reviewer: string;
    scores: Record<string, number>;
    decision: string;
}

export interface ListParams {
    page?: number;
    pageSize?: number;
    difficulty?: string;
    op?: string;
    status?: string;
}

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
        this.name = "ApiError";
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
    constructor(
        private baseUrl: string = "",
        private fetchFn: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        let response: Response;
        try {
            response = await this.fetchFn(this.baseUrl + path, init);
        } catch (err) {
            throw new ApiError(0, `network error: ${String(err)}`);
        }
        let body: unknown = null;
        try {
            body = await response.json();
        } catch {
            // non-JSON body; fall through with the status text
        }
        if (!response.ok) {
            const message =
                body && typeof body === "object" && "error" in body
                    ? String((body as { error: unknown }).error)
                    : response.statusText;
            throw new ApiError(response.status, message);
        }
        return body as T;
    }

    listTasks(params: ListParams = {}): Promise<TaskListPage> {
        const query = new URLSearchParams();
        if (params.page) query.set("page", String(params.page));
        if (params.pageSize) query.set("page_size", String(params.pageSize));
        if (params.difficulty) query.set("difficulty", params.difficulty);
        if (params.op) query.set("op", params.op);
        if (params.status) query.set("status", params.status);
        const suffix = query.toString() ? `?${query.toString()}` : "";
        return this.request<TaskListPage>(`/api/tasks${suffix}`);
    }

    getTask(id: string): Promise<TaskDetail> {
        return this.request<TaskDetail>(`/api/tasks/${encodeURIComponent(id)}`);
    }

    getStats(): Promise<Stats> {
        return this.request<Stats>("/api/stats");
    }

    submitVerdict(id: string, verdict: VerdictSubmission): Promise<{ ok: boolean; verdict: VerdictRecord }> {
        return this.request(`/api/tasks/${encodeURIComponent(id)}/verdict`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(verdict),
        });
    }
}
