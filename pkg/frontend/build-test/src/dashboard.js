/**
 * Dashboard view: aggregate cards from /api/stats plus a filterable,
 * paginated task list from /api/tasks.
 */
import { difficultyClass, filterSummaries, formatDuration, formatPercent, paginate, } from "./viewmodel.js";
const LIST_PAGE_SIZE = 20;
export async function renderDashboard(root, deps) {
    root.textContent = "Loading…";
    let stats;
    let tasks;
    try {
        stats = await deps.api.getStats();
        // fetch every summary once; filters are applied client-side
        const first = await deps.api.listTasks({ page: 1, pageSize: 200 });
        tasks = [...first.tasks];
        let page = 2;
        while (tasks.length < first.total) {
            const next = await deps.api.listTasks({ page, pageSize: 200 });
            if (!next.tasks.length)
                break;
            tasks.push(...next.tasks);
            page += 1;
        }
    }
    catch (err) {
        root.textContent = "";
        deps.showError(`Could not load the dashboard: ${String(err)}`, () => void renderDashboard(root, deps));
        return;
    }
    const state = { stats, tasks, filter: {}, page: 1 };
    draw(root, state, deps);
}
function draw(root, state, deps) {
    root.textContent = "";
    root.appendChild(statsCards(state.stats));
    root.appendChild(filterBar(state, deps, root));
    root.appendChild(taskList(state, deps, root));
}
function card(label, value) {
    const el = document.createElement("div");
    el.className = "card";
    const big = document.createElement("div");
    big.className = "card-value";
    big.textContent = value;
    const small = document.createElement("div");
    small.className = "card-label";
    small.textContent = label;
    el.append(big, small);
    return el;
}
function statsCards(stats) {
    const wrap = document.createElement("section");
    wrap.className = "cards";
    wrap.append(card("tasks", String(stats.total)), card("success rate", formatPercent(stats.success_rate)), card("reviewed", String(stats.reviewed_tasks)), card("accept rate", formatPercent(stats.accept_rate)), card("agreement κ", stats.kappa === null ? "–" : stats.kappa.toFixed(2)));
    const mix = document.createElement("div");
    mix.className = "difficulty-mix";
    for (const [tier, count] of Object.entries(stats.difficulty)) {
        const chip = document.createElement("span");
        chip.className = difficultyClass(tier);
        chip.textContent = `${tier} ${count}`;
        mix.appendChild(chip);
    }
    wrap.appendChild(mix);
    return wrap;
}
function filterBar(state, deps, root) {
    const bar = document.createElement("section");
    bar.className = "filter-bar";
    const difficulty = document.createElement("select");
    difficulty.innerHTML =
        '<option value="">all difficulties</option>' +
            ["Easy", "Medium", "Hard"]
                .map((d) => `<option${state.filter.difficulty === d ? " selected" : ""}>${d}</option>`)
                .join("");
    difficulty.onchange = () => {
        state.filter = { ...state.filter, difficulty: difficulty.value || undefined };
        state.page = 1;
        draw(root, state, deps);
    };
    bar.appendChild(difficulty);
    const status = document.createElement("select");
    status.innerHTML =
        '<option value="">all statuses</option>' +
            ["pass", "fail"]
                .map((s) => `<option${state.filter.status === s ? " selected" : ""}>${s}</option>`)
                .join("");
    status.onchange = () => {
        state.filter = { ...state.filter, status: status.value || undefined };
        state.page = 1;
        draw(root, state, deps);
    };
    bar.appendChild(status);
    const ops = new Set();
    for (const task of state.tasks)
        for (const op of task.ops)
            ops.add(op);
    for (const op of [...ops].sort()) {
        const chip = document.createElement("button");
        chip.className = state.filter.op === op ? "op-chip active" : "op-chip";
        chip.textContent = op;
        chip.onclick = () => {
            state.filter = { ...state.filter, op: state.filter.op === op ? undefined : op };
            state.page = 1;
            draw(root, state, deps);
        };
        bar.appendChild(chip);
    }
    return bar;
}
function taskList(state, deps, root) {
    const section = document.createElement("section");
    const filtered = filterSummaries(state.tasks, state.filter);
    if (!filtered.length) {
        const empty = document.createElement("p");
        empty.className = "empty-state";
        empty.textContent = state.tasks.length
            ? "No tasks match the current filters."
            : "No tasks found. Point the server at a synthesized task directory.";
        section.appendChild(empty);
        return section;
    }
    const { rows, page, pages } = paginate(filtered, state.page, LIST_PAGE_SIZE);
    const table = document.createElement("table");
    table.className = "task-list";
    table.innerHTML =
        "<thead><tr><th>id</th><th>difficulty</th><th>status</th>" +
            "<th>duration</th><th>operators</th><th>reviewed</th></tr></thead>";
    const body = document.createElement("tbody");
    for (const task of rows) {
        const tr = document.createElement("tr");
        tr.onclick = () => deps.navigate(`#/task/${task.id}`);
        const id = document.createElement("td");
        id.textContent = task.id;
        const diff = document.createElement("td");
        const chip = document.createElement("span");
        chip.className = difficultyClass(task.difficulty);
        chip.textContent = task.difficulty;
        diff.appendChild(chip);
        const status = document.createElement("td");
        status.innerHTML = `<span class="badge badge-${task.status}">${task.status}</span>`;
        const duration = document.createElement("td");
        duration.textContent = formatDuration(task.duration);
        const opsCell = document.createElement("td");
        for (const op of task.ops) {
            const opChip = document.createElement("span");
            opChip.className = "op-chip small";
            opChip.textContent = op;
            opsCell.appendChild(opChip);
        }
        const reviewed = document.createElement("td");
        reviewed.textContent = task.reviewed ? "✓" : "";
        tr.append(id, diff, status, duration, opsCell, reviewed);
        body.appendChild(tr);
    }
    table.appendChild(body);
    section.appendChild(table);
    if (pages > 1) {
        const nav = document.createElement("div");
        nav.className = "pager";
        const prev = document.createElement("button");
        prev.textContent = "‹ prev";
        prev.disabled = page <= 1;
        prev.onclick = () => {
            state.page = page - 1;
            draw(root, state, deps);
        };
        const label = document.createElement("span");
        label.textContent = `page ${page} / ${pages}`;
        const next = document.createElement("button");
        next.textContent = "next ›";
        next.disabled = page >= pages;
        next.onclick = () => {
            state.page = page + 1;
            draw(root, state, deps);
        };
        nav.append(prev, label, next);
        section.appendChild(nav);
    }
    return section;
}
