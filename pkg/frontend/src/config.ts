// Single setting: the service base URL. Priority: ?api= query parameter,
// then a value saved by the settings box, then same-host default.

const STORAGE_KEY = "lesionscreen.apiBase";

export function apiBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery) return fromQuery.replace(/\/$/, "");
  const stored = window.sessionStorage.getItem(STORAGE_KEY);
  if (stored) return stored.replace(/\/$/, "");
  return "http://127.0.0.1:8000";
}

export function rememberApiBaseUrl(url: string): void {
  window.sessionStorage.setItem(STORAGE_KEY, url.replace(/\/$/, ""));
}
