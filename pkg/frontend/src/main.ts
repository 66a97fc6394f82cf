import { CloudClient } from "./client.js";
import { ConsoleApp } from "./app.js";

// Base URL comes from ?api=...; without it the console assumes it is
// served from the same origin as the cloud service.
const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? window.location.origin;

const app = new ConsoleApp(document, new CloudClient(base));
app.start();
