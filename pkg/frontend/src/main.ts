/** Hash-routed single-page bootstrap: #/ is the dashboard, #/task/<id>
 * the review view. The server is the only source of truth; navigating
 * or refreshing never loses a submitted verdict. */

import { ApiClient } from "./api.js";
import { renderDashboard } from "./dashboard.js";
import { renderTaskView } from "./taskview.js";
import { nextUnreviewedId } from "./viewmodel.js";

const api = new ApiClient("");
const app = document.getElementById("app") as HTMLElement;
const banner = document.getElementById("banner") as HTMLElement;

function navigate(hash: string): void {
    if (location.hash === hash) {
        void route();
    } else {
        location.hash = hash;
    }
}

function showError(message: string, retry: () => void): void {
    banner.textContent = "";
    const text = document.createElement("span");
    text.className = "error-banner";
    text.textContent = message;
    const button = document.createElement("button");
    button.textContent = "retry";
    button.onclick = () => {
        banner.textContent = "";
        retry();
    };
    banner.append(text, button);
}

async function nextUnreviewed(afterId: string): Promise<string | null> {
    // fresh summaries so another reviewer's progress is respected
    const tasks = [];
    let page = 1;
    for (;;) {
        const chunk = await api.listTasks({ page, pageSize: 200 });
        tasks.push(...chunk.tasks);
        if (tasks.length >= chunk.total || !chunk.tasks.length) break;
        page += 1;
    }
    return nextUnreviewedId(tasks, afterId);
}

function teardown(): void {
    for (const panel of Array.from(app.children)) {
        panel.dispatchEvent(new Event("view-destroy"));
    }
}

async function route(): Promise<void> {
    teardown();
    banner.textContent = "";
    const hash = location.hash || "#/";
    const taskMatch = /^#\/task\/(.+)$/.exec(hash);
    if (taskMatch) {
        await renderTaskView(app, decodeURIComponent(taskMatch[1]), {
            api,
            navigate,
            nextUnreviewed,
            showError,
        });
    } else {
        await renderDashboard(app, { api, navigate, showError });
    }
}

window.addEventListener("hashchange", () => void route());
void route();
