import "./style.css";
import { mount } from "./app";

// same-origin by default; point at another host for the vite dev server
const base = import.meta.env.VITE_API_BASE ?? "";
mount(document.getElementById("app") as HTMLElement, base);
