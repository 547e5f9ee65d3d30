/**
 * Pure view-model logic: filtering, pagination, the verdict form state
 * machine, and the keyboard mapping. Everything here is DOM-free so it
 * runs under the node test runner.
 */

import type { TaskSummary } from "./api.js";

export const CRITERIA = [
    "instruction_accuracy",
    "operator_coverage",
    "semantic_clarity",
] as const;

export type Criterion = (typeof CRITERIA)[number];

export const CRITERION_LABELS: Record<Criterion, string> = {
    instruction_accuracy: "Instruction accuracy",
    operator_coverage: "Operator coverage",
    semantic_clarity: "Semantic clarity",
};

export interface SummaryFilter {
    difficulty?: string;
    op?: string;
    status?: string;
}

export function filterSummaries(tasks: TaskSummary[], filter: SummaryFilter): TaskSummary[] {
    return tasks.filter((task) => {
        if (filter.difficulty && task.difficulty !== filter.difficulty) return false;
        if (filter.op && !task.ops.includes(filter.op)) return false;
        if (filter.status && task.status !== filter.status) return false;
        return true;
    });
}

export function formatPercent(value: number | null | undefined): string {
    if (value === null || value === undefined || Number.isNaN(value)) return "–";
    return `${Math.round(value * 100)}%`;
}

export function formatDuration(seconds: number): string {
    if (seconds < 1) return `${Math.round(seconds * 1000)} ms`;
    return `${seconds.toFixed(2)} s`;
}

export function difficultyClass(difficulty: string): string {
    return `chip chip-${difficulty.toLowerCase()}`;
}

/** Queue workflow: the next unreviewed task after the current one,
 * wrapping around; null when everything is reviewed. */
export function nextUnreviewedId(tasks: TaskSummary[], afterId: string | null): string | null {
    if (!tasks.length) return null;
    const start = afterId ? tasks.findIndex((t) => t.id === afterId) + 1 : 0;
    for (let offset = 0; offset < tasks.length; offset++) {
        const task = tasks[(start + offset) % tasks.length];
        if (!task.reviewed && task.id !== afterId) return task.id;
    }
    return null;
}

export interface Paginated<T> {
    rows: T[];
    page: number;
    pages: number;
}

export function paginate<T>(rows: T[], page: number, perPage: number): Paginated<T> {
    const pages = Math.max(1, Math.ceil(rows.length / perPage));
    const clamped = Math.min(Math.max(1, page), pages);
    const start = (clamped - 1) * perPage;
    return { rows: rows.slice(start, start + perPage), page: clamped, pages };
}

export const TABLE_PAGE_ROWS = 50;

// -- verdict form state machine ------------------------------------------------

export interface VerdictDraft {
    reviewer: string;
    scores: Partial<Record<Criterion, number>>;
    decision?: "accept" | "reject";
}

export function emptyDraft(reviewer = ""): VerdictDraft {
    return { reviewer, scores: {} };
}

export function setScore(draft: VerdictDraft, criterion: Criterion, score: number): VerdictDraft {
    return { ...draft, scores: { ...draft.scores, [criterion]: score } };
}

export function setDecision(draft: VerdictDraft, decision: "accept" | "reject"): VerdictDraft {
    return { ...draft, decision };
}

export function allScored(draft: VerdictDraft): boolean {
    return CRITERIA.every((c) => typeof draft.scores[c] === "number");
}

/** Human-readable reasons the form cannot be submitted yet. */
export function submitBlockers(draft: VerdictDraft): string[] {
    const blockers: string[] = [];
    if (!draft.reviewer.trim()) blockers.push("reviewer id is required");
    for (const criterion of CRITERIA) {
        if (typeof draft.scores[criterion] !== "number") {
            blockers.push(`${CRITERION_LABELS[criterion]} is not scored`);
        }
    }
    if (!draft.decision) blockers.push("choose accept or reject");
    if (draft.decision === "accept" && CRITERIA.some((c) => draft.scores[c] !== 3)) {
        blockers.push("accept requires a 3 on every criterion");
    }
    return blockers;
}

export function canSubmit(draft: VerdictDraft): boolean {
    return submitBlockers(draft).length === 0;
}

/**
 * Keyboard review: 1-3 score the first unscored criterion, a/r pick the
 * decision. Returns the unchanged draft for unrelated keys.
 */
export function applyKey(draft: VerdictDraft, key: string): VerdictDraft {
    if (key === "1" || key === "2" || key === "3") {
        const pending = CRITERIA.find((c) => typeof draft.scores[c] !== "number");
        if (!pending) return draft;
        return setScore(draft, pending, Number(key));
    }
    if (key === "a") return setDecision(draft, "accept");
    if (key === "r") return setDecision(draft, "reject");
    return draft;
}

// -- rendering helpers ------------------------------------------------------------

/** SQL placeholder/comment lines get distinct styling in the code panel. */
export function codeLineClass(line: string): string {
    return line.trimStart().startsWith("--") ? "code-line sql-unsupported" : "code-line";
}

export function mismatchClass(isMismatch: boolean): string {
    return isMismatch ? "cell cell-mismatch" : "cell";
}

export function formatCell(value: unknown): string {
    if (value === null || value === undefined) return "∅";
    if (typeof value === "boolean") return value ? "true" : "false";
    return String(value);
}
