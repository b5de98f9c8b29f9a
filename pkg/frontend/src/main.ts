import { ApiClient } from "./api.js";
import { apiBaseUrl, rememberApiBaseUrl } from "./config.js";
import { ScreeningUi } from "./ui.js";

const base = apiBaseUrl();
const baseInput = document.getElementById("api-base") as HTMLInputElement;
baseInput.value = base;
baseInput.addEventListener("change", () => {
  rememberApiBaseUrl(baseInput.value);
  window.location.reload();
});

void new ScreeningUi(document, new ApiClient(base)).start();
