import { test } from "node:test";
import assert from "node:assert/strict";
import { CRITERIA, applyKey, canSubmit, codeLineClass, emptyDraft, filterSummaries, formatCell, formatPercent, mismatchClass, nextUnreviewedId, paginate, setDecision, setScore, submitBlockers, } from "../src/viewmodel.js";
function summary(id, overrides = {}) {
    return {
        id,
        difficulty: "Easy",
        status: "pass",
        duration: 0.01,
        ops: ["sort"],
        num_ops: 1,
        reviewed: false,
        ...overrides,
    };
}
test("filterSummaries narrows by operator chip", () => {
    const tasks = [
        summary("a", { ops: ["groupby", "sort"] }),
        summary("b", { ops: ["filter"] }),
        summary("c", { ops: ["groupby"] }),
    ];
    const filtered = filterSummaries(tasks, { op: "groupby" });
    assert.deepEqual(filtered.map((t) => t.id), ["a", "c"]);
});
test("filterSummaries combines difficulty and status", () => {
    const tasks = [
        summary("a", { difficulty: "Hard", status: "fail" }),
        summary("b", { difficulty: "Hard" }),
        summary("c"),
    ];
    assert.deepEqual(filterSummaries(tasks, { difficulty: "Hard", status: "pass" }).map((t) => t.id), ["b"]);
});
test("formatPercent handles the 97% card and missing values", () => {
    assert.equal(formatPercent(0.97), "97%");
    assert.equal(formatPercent(null), "–");
    assert.equal(formatPercent(1), "100%");
});
test("nextUnreviewedId walks the queue and wraps", () => {
    const tasks = [
        summary("a", { reviewed: true }),
        summary("b"),
        summary("c", { reviewed: true }),
        summary("d"),
    ];
    assert.equal(nextUnreviewedId(tasks, null), "b");
    assert.equal(nextUnreviewedId(tasks, "b"), "d");
    assert.equal(nextUnreviewedId(tasks, "d"), "b");
    const done = tasks.map((t) => ({ ...t, reviewed: true }));
    assert.equal(nextUnreviewedId(done, "a"), null);
});
test("paginate clamps out-of-range pages", () => {
    const rows = Array.from({ length: 120 }, (_, i) => i);
    assert.equal(paginate(rows, 1, 50).rows.length, 50);
    assert.equal(paginate(rows, 3, 50).rows.length, 20);
    assert.equal(paginate(rows, 99, 50).page, 3);
    assert.equal(paginate([], 1, 50).pages, 1);
});
test("verdict form blocks submission until complete", () => {
    let draft = emptyDraft("");
    assert.equal(canSubmit(draft), false);
    assert.ok(submitBlockers(draft).some((b) => b.includes("reviewer")));
    draft = { ...draft, reviewer: "r1" };
    for (const criterion of CRITERIA)
        draft = setScore(draft, criterion, 3);
    assert.equal(canSubmit(draft), false); // decision still missing
    draft = setDecision(draft, "accept");
    assert.equal(canSubmit(draft), true);
});
test("accept demands a 3 on every criterion", () => {
    let draft = emptyDraft("r1");
    for (const criterion of CRITERIA)
        draft = setScore(draft, criterion, 3);
    draft = setScore(draft, "semantic_clarity", 2);
    draft = setDecision(draft, "accept");
    assert.equal(canSubmit(draft), false);
    assert.ok(submitBlockers(draft).some((b) => b.includes("accept")));
    draft = setDecision(draft, "reject");
    assert.equal(canSubmit(draft), true);
});
test("score keys fill criteria in order; a/r set the decision", () => {
    let draft = emptyDraft("r1");
    draft = applyKey(draft, "3");
    draft = applyKey(draft, "2");
    draft = applyKey(draft, "3");
    assert.deepEqual(draft.scores, {
        instruction_accuracy: 3,
        operator_coverage: 2,
        semantic_clarity: 3,
    });
    const extra = applyKey(draft, "1"); // everything scored: no-op
    assert.deepEqual(extra.scores, draft.scores);
    assert.equal(applyKey(draft, "a").decision, "accept");
    assert.equal(applyKey(draft, "r").decision, "reject");
    assert.equal(applyKey(draft, "x"), draft);
});
test("sql placeholder lines are styled distinctly", () => {
    assert.equal(codeLineClass("-- transpose: unsupported in SQL backend"), "code-line sql-unsupported");
    assert.equal(codeLineClass("SELECT * FROM step_1"), "code-line");
    assert.equal(codeLineClass("  .head(2)"), "code-line");
});
test("cell rendering marks nulls and mismatches", () => {
    assert.equal(formatCell(null), "∅");
    assert.equal(formatCell(true), "true");
    assert.equal(formatCell(4.875), "4.875");
    assert.equal(mismatchClass(true), "cell cell-mismatch");
    assert.equal(mismatchClass(false), "cell");
});
