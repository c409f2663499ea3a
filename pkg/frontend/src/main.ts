import { ApiClient } from "./api.js";
import { createDashboard } from "./dashboard.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app root");
void createDashboard(root, new ApiClient("")).init();
