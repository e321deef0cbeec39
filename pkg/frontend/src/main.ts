/** Browser entry point. */

import { ApiClient } from "./api.js";
import { setupApp } from "./app.js";

setupApp(document, new ApiClient());
