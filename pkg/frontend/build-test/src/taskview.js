/**
 * Task review view: description panel, compiled-code panel, and the
 * side-by-side table comparison with per-cell mismatch highlighting,
 * plus the keyboard-driven verdict form.
 */
import { ApiError } from "./api.js";
import { CRITERIA, CRITERION_LABELS, TABLE_PAGE_ROWS, applyKey, canSubmit, codeLineClass, difficultyClass, emptyDraft, formatCell, mismatchClass, paginate, setDecision, setScore, submitBlockers, } from "./viewmodel.js";
const REVIEWER_KEY = "pipeline-review.reviewer";
export async function renderTaskView(root, id, deps) {
    root.textContent = "Loading…";
    let detail;
    try {
        detail = await deps.api.getTask(id);
    }
    catch (err) {
        root.textContent = "";
        deps.showError(`Could not load ${id}: ${String(err)}`, () => void renderTaskView(root, id, deps));
        return;
    }
    root.textContent = "";
    const header = document.createElement("div");
    header.className = "task-header";
    const title = document.createElement("h2");
    title.textContent = detail.id;
    const chip = document.createElement("span");
    chip.className = difficultyClass(detail.difficulty);
    chip.textContent = detail.difficulty;
    const status = document.createElement("span");
    status.className = `badge badge-${detail.status}`;
    status.textContent = detail.status;
    header.append(title, chip, status);
    root.appendChild(header);
    const panels = document.createElement("div");
    panels.className = "panels";
    panels.appendChild(descriptionPanel(detail));
    panels.appendChild(codePanel(detail));
    root.appendChild(panels);
    root.appendChild(comparisonPanel(detail));
    root.appendChild(verdictPanel(detail, deps));
}
// -- panel 1: instruction, intent, chain ---------------------------------------
function descriptionPanel(detail) {
    const panel = document.createElement("section");
    panel.className = "panel";
    panel.innerHTML = "<h3>Task description</h3>";
    const intent = document.createElement("p");
    intent.className = "intent";
    intent.textContent = detail.instruction.final;
    panel.appendChild(intent);
    const draft = document.createElement("details");
    const summary = document.createElement("summary");
    summary.textContent = "structured draft";
    draft.appendChild(summary);
    const draftText = document.createElement("p");
    draftText.textContent = detail.instruction.draft;
    draft.appendChild(draftText);
    panel.appendChild(draft);
    const chain = document.createElement("ol");
    chain.className = "chain";
    for (const step of detail.program) {
        const li = document.createElement("li");
        const name = document.createElement("span");
        name.className = "op-chip";
        name.textContent = step.op;
        const params = document.createElement("code");
        params.textContent = JSON.stringify(step.params);
        li.append(name, params);
        chain.appendChild(li);
    }
    panel.appendChild(chain);
    return panel;
}
// -- panel 2: compiled code ------------------------------------------------------
function codePanel(detail) {
    const panel = document.createElement("section");
    panel.className = "panel";
    panel.innerHTML = "<h3>Compiled code</h3>";
    const dialects = Object.keys(detail.code);
    const tabs = document.createElement("div");
    tabs.className = "tabs";
    const pre = document.createElement("pre");
    pre.className = "code";
    const show = (dialect) => {
        pre.textContent = "";
        for (const line of (detail.code[dialect] ?? "").split("\n")) {
            const div = document.createElement("div");
            div.className = codeLineClass(line);
            div.textContent = line === "" ? " " : line;
            pre.appendChild(div);
        }
        for (const button of Array.from(tabs.children)) {
            button.classList.toggle("active", button.textContent === dialect);
        }
    };
    for (const dialect of dialects) {
        const tab = document.createElement("button");
        tab.textContent = dialect;
        tab.onclick = () => show(dialect);
        tabs.appendChild(tab);
    }
    panel.append(tabs, pre);
    if (dialects.length)
        show(dialects[0]);
    return panel;
}
// -- panel 3: side-by-side tables --------------------------------------------------
function tableGrid(title, columns, rows, mismatch) {
    const wrap = document.createElement("div");
    wrap.className = "table-wrap";
    const caption = document.createElement("h4");
    caption.textContent = title;
    wrap.appendChild(caption);
    let page = 1;
    const grid = document.createElement("table");
    grid.className = "data-grid";
    const pager = document.createElement("div");
    pager.className = "pager";
    const drawPage = () => {
        const view = paginate(rows, page, TABLE_PAGE_ROWS);
        page = view.page;
        grid.textContent = "";
        const head = document.createElement("tr");
        for (const column of columns) {
            const th = document.createElement("th");
            th.textContent = column;
            head.appendChild(th);
        }
        grid.appendChild(head);
        const offset = (view.page - 1) * TABLE_PAGE_ROWS;
        view.rows.forEach((row, i) => {
            const tr = document.createElement("tr");
            row.forEach((cell, j) => {
                const td = document.createElement("td");
                td.className = mismatchClass(Boolean(mismatch?.[offset + i]?.[j]));
                td.textContent = formatCell(cell);
                tr.appendChild(td);
            });
            grid.appendChild(tr);
        });
        pager.textContent = "";
        if (view.pages > 1) {
            const prev = document.createElement("button");
            prev.textContent = "‹";
            prev.disabled = view.page <= 1;
            prev.onclick = () => {
                page = view.page - 1;
                drawPage();
            };
            const label = document.createElement("span");
            label.textContent = ` ${view.page}/${view.pages} `;
            const next = document.createElement("button");
            next.textContent = "›";
            next.disabled = view.page >= view.pages;
            next.onclick = () => {
                page = view.page + 1;
                drawPage();
            };
            pager.append(prev, label, next);
        }
    };
    drawPage();
    wrap.append(grid, pager);
    return wrap;
}
function jsonTableGrid(title, table) {
    return tableGrid(`${title}: ${table.name}`, table.columns.map((c) => c.name), table.rows);
}
function comparisonPanel(detail) {
    const panel = document.createElement("section");
    panel.className = "panel";
    panel.innerHTML = "<h3>Tables</h3>";
    const row = document.createElement("div");
    row.className = "table-row";
    for (const table of detail.tables) {
        row.appendChild(jsonTableGrid("input", table));
    }
    if (detail.diff.aligned && detail.diff.columns) {
        row.appendChild(tableGrid("target output", detail.diff.columns, detail.diff.gold_rows ?? []));
        row.appendChild(tableGrid("actual execution", detail.diff.columns, detail.diff.actual_rows ?? [], detail.diff.mismatch));
    }
    else {
        row.appendChild(jsonTableGrid("target output", detail.gold_output));
        const note = document.createElement("p");
        note.className = "error-note";
        note.textContent = detail.actual
            ? `outputs not alignable: ${detail.diff.reason ?? "shape mismatch"}`
            : `execution failed: ${detail.error ?? "unknown error"}`;
        if (detail.actual)
            row.appendChild(jsonTableGrid("actual execution", detail.actual));
        panel.appendChild(note);
    }
    panel.appendChild(row);
    return panel;
}
// -- verdict form -------------------------------------------------------------------
function verdictPanel(detail, deps) {
    const panel = document.createElement("section");
    panel.className = "panel verdict";
    panel.innerHTML = "<h3>Verdict</h3><p class='hint'>keys: 1–3 score · a/r decide · n next</p>";
    let draft = emptyDraft(localStorage.getItem(REVIEWER_KEY) ?? "");
    const form = document.createElement("div");
    panel.appendChild(form);
    const submit = async () => {
        if (!canSubmit(draft))
            return;
        localStorage.setItem(REVIEWER_KEY, draft.reviewer.trim());
        const payload = {
            reviewer: draft.reviewer.trim(),
            scores: { ...draft.scores },
            decision: draft.decision,
        };
        const previous = draft;
        draw("submitting…");
        try {
            await deps.api.submitVerdict(detail.id, payload);
            detail.reviewed = true;
            const next = await deps.nextUnreviewed(detail.id);
            if (next) {
                deps.navigate(`#/task/${next}`);
            }
            else {
                draw("saved — queue complete");
            }
        }
        catch (err) {
            // roll the optimistic state back and surface the server error
            draft = previous;
            draw(err instanceof ApiError ? `rejected: ${err.message}` : String(err));
        }
    };
    const draw = (notice = "") => {
        form.textContent = "";
        const reviewer = document.createElement("input");
        reviewer.placeholder = "reviewer id";
        reviewer.value = draft.reviewer;
        reviewer.oninput = () => {
            draft = { ...draft, reviewer: reviewer.value };
            refreshControls();
        };
        form.appendChild(reviewer);
        for (const criterion of CRITERIA) {
            const row = document.createElement("div");
            row.className = "score-row";
            const label = document.createElement("span");
            label.textContent = CRITERION_LABELS[criterion];
            row.appendChild(label);
            for (const score of [1, 2, 3]) {
                const button = document.createElement("button");
                button.textContent = String(score);
                button.className =
                    draft.scores[criterion] === score ? "score-btn active" : "score-btn";
                button.onclick = () => {
                    draft = setScore(draft, criterion, score);
                    draw(notice);
                };
                row.appendChild(button);
            }
            form.appendChild(row);
        }
        const decisions = document.createElement("div");
        decisions.className = "decision-row";
        for (const decision of ["accept", "reject"]) {
            const button = document.createElement("button");
            button.textContent = decision;
            button.className =
                draft.decision === decision ? `decision ${decision} active` : `decision ${decision}`;
            button.onclick = () => {
                draft = setDecision(draft, decision);
                draw(notice);
            };
            decisions.appendChild(button);
        }
        form.appendChild(decisions);
        const submitButton = document.createElement("button");
        submitButton.className = "submit";
        submitButton.textContent = "submit verdict";
        submitButton.onclick = () => void submit();
        form.appendChild(submitButton);
        const blockers = document.createElement("p");
        blockers.className = "blockers";
        form.appendChild(blockers);
        const noticeEl = document.createElement("p");
        noticeEl.className = "notice";
        noticeEl.textContent = notice;
        form.appendChild(noticeEl);
        function refreshControls() {
            submitButton.disabled = !canSubmit(draft);
            blockers.textContent = submitButton.disabled ? submitBlockers(draft).join(" · ") : "";
        }
        refreshControls();
    };
    draw();
    const onKey = (event) => {
        if (event.target?.tagName === "INPUT")
            return;
        if (event.key === "n") {
            void deps.nextUnreviewed(detail.id).then((next) => {
                if (next)
                    deps.navigate(`#/task/${next}`);
            });
            return;
        }
        if (event.key === "Enter" && canSubmit(draft)) {
            void submit();
            return;
        }
        const updated = applyKey(draft, event.key);
        if (updated !== draft) {
            draft = updated;
            draw();
        }
    };
    document.addEventListener("keydown", onKey);
    panel.addEventListener("view-destroy", () => document.removeEventListener("keydown", onKey));
    return panel;
}
