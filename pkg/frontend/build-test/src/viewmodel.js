/**
 * Pure view-model logic: filtering, pagination, the verdict form state
 * machine, and the keyboard mapping. Everything here is DOM-free so it
 * runs under the node test runner.
 */
export const CRITERIA = [
    "instruction_accuracy",
    "operator_coverage",
    "semantic_clarity",
];
export const CRITERION_LABELS = {
    instruction_accuracy: "Instruction accuracy",
    operator_coverage: "Operator coverage",
    semantic_clarity: "Semantic clarity",
};
export function filterSummaries(tasks, filter) {
    return tasks.filter((task) => {
        if (filter.difficulty && task.difficulty !== filter.difficulty)
            return false;
        if (filter.op && !task.ops.includes(filter.op))
            return false;
        if (filter.status && task.status !== filter.status)
            return false;
        return true;
    });
}
export function formatPercent(value) {
    if (value === null || value === undefined || Number.isNaN(value))
        return "–";
    return `${Math.round(value * 100)}%`;
}
export function formatDuration(seconds) {
    if (seconds < 1)
        return `${Math.round(seconds * 1000)} ms`;
    return `${seconds.toFixed(2)} s`;
}
export function difficultyClass(difficulty) {
    return `chip chip-${difficulty.toLowerCase()}`;
}
/** Queue workflow: the next unreviewed task after the current one,
 * wrapping around; null when everything is reviewed. */
export function nextUnreviewedId(tasks, afterId) {
    if (!tasks.length)
        return null;
    const start = afterId ? tasks.findIndex((t) => t.id === afterId) + 1 : 0;
    for (let offset = 0; offset < tasks.length; offset++) {
        const task = tasks[(start + offset) % tasks.length];
        if (!task.reviewed && task.id !== afterId)
            return task.id;
    }
    return null;
}
export function paginate(rows, page, perPage) {
    const pages = Math.max(1, Math.ceil(rows.length / perPage));
    const clamped = Math.min(Math.max(1, page), pages);
    const start = (clamped - 1) * perPage;
    return { rows: rows.slice(start, start + perPage), page: clamped, pages };
}
export const TABLE_PAGE_ROWS = 50;
export function emptyDraft(reviewer = "") {
    return { reviewer, scores: {} };
}
export function setScore(draft, criterion, score) {
    return { ...draft, scores: { ...draft.scores, [criterion]: score } };
}
export function setDecision(draft, decision) {
    return { ...draft, decision };
}
export function allScored(draft) {
    return CRITERIA.every((c) => typeof draft.scores[c] === "number");
}
/** Human-readable reasons the form cannot be submitted yet. */
export function submitBlockers(draft) {
    const blockers = [];
    if (!draft.reviewer.trim())
        blockers.push("reviewer id is required");
    for (const criterion of CRITERIA) {
        if (typeof draft.scores[criterion] !== "number") {
            blockers.push(`${CRITERION_LABELS[criterion]} is not scored`);
        }
    }
    if (!draft.decision)
        blockers.push("choose accept or reject");
    if (draft.decision === "accept" && CRITERIA.some((c) => draft.scores[c] !== 3)) {
        blockers.push("accept requires a 3 on every criterion");
    }
    return blockers;
}
export function canSubmit(draft) {
    return submitBlockers(draft).length === 0;
}
/**
 * Keyboard review: 1-3 score the first unscored criterion, a/r pick the
 * decision. Returns the unchanged draft for unrelated keys.
 */
export function applyKey(draft, key) {
    if (key === "1" || key === "2" || key === "3") {
        const pending = CRITERIA.find((c) => typeof draft.scores[c] !== "number");
        if (!pending)
            return draft;
        return setScore(draft, pending, Number(key));
    }
    if (key === "a")
        return setDecision(draft, "accept");
    if (key === "r")
        return setDecision(draft, "reject");
    return draft;
}
// -- rendering helpers ------------------------------------------------------------
/** SQL placeholder/comment lines get distinct styling in the code panel. */
export function codeLineClass(line) {
    return line.trimStart().startsWith("--") ? "code-line sql-unsupported" : "code-line";
}
export function mismatchClass(isMismatch) {
    return isMismatch ? "cell cell-mismatch" : "cell";
}
export function formatCell(value) {
    if (value === null || value === undefined)
        return "∅";
    if (typeof value === "boolean")
        return value ? "true" : "false";
    return String(value);
}
