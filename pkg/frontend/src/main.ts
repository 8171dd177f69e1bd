import { Client } from "./api.js";
import { AppState } from "./state.js";
import { mount } from "./render.js";

const state = new AppState(new Client(""));
mount(state, document.getElementById("app")!);
void state.loadReport();
