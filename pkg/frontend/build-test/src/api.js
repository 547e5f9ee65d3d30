/**
 * Typed client for the review service JSON API. All reads and writes in
 * the UI go through this module; nothing touches files directly.
 */
export class ApiError extends Error {
    status;
    constructor(status, message) {
        super(message);
        this.status = status;
        this.name = "ApiError";
    }
}
export class ApiClient {
    baseUrl;
    fetchFn;
    constructor(baseUrl = "", fetchFn = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async request(path, init) {
        let response;
        try {
            response = await this.fetchFn(this.baseUrl + path, init);
        }
        catch (err) {
            throw new ApiError(0, `network error: ${String(err)}`);
        }
        let body = null;
        try {
            body = await response.json();
        }
        catch {
            // non-JSON body; fall through with the status text
        }
        if (!response.ok) {
            const message = body && typeof body === "object" && "error" in body
                ? String(body.error)
                : response.statusText;
            throw new ApiError(response.status, message);
        }
        return body;
    }
    listTasks(params = {}) {
        const query = new URLSearchParams();
        if (params.page)
            query.set("page", String(params.page));
        if (params.pageSize)
            query.set("page_size", String(params.pageSize));
        if (params.difficulty)
            query.set("difficulty", params.difficulty);
        if (params.op)
            query.set("op", params.op);
        if (params.status)
            query.set("status", params.status);
        const suffix = query.toString() ? `?${query.toString()}` : "";
        return this.request(`/api/tasks${suffix}`);
    }
    getTask(id) {
        return this.request(`/api/tasks/${encodeURIComponent(id)}`);
    }
    getStats() {
        return this.request("/api/stats");
    }
    submitVerdict(id, verdict) {
        return this.request(`/api/tasks/${encodeURIComponent(id)}/verdict`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(verdict),
        });
    }
}
