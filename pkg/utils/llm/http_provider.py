# native Python packages
import os
from typing import Optional

# third-party packages
import requests

# custom packages
from utils.errors import ProviderError
from utils.llm.base import GenerationRequest, Provider


class HttpChatProvider(Provider):
    """
    Thin adapter for chat-completion style JSON APIs.

    The API token is read from the environment variable named by `api_key_env` on every call and is
    never stored on disk.
    """

    name = "http"
    is_network = True

    def __init__(
        self,
        model: str,
        base_url: Optional[str] = "https://api.openai.com/v1",
        api_key_env: Optional[str] = "OPENAI_API_KEY",
        timeout: Optional[float] = 60.0,
        session: Optional[requests.Session] = None,
    ):
        super().__init__(model)
        if session is None:
            session = requests.Session()

        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.session = session

    def _headers(self) -> dict:
        api_key = os.getenv(self.api_key_env)
        if not api_key:
            raise ProviderError(
                f"{self.api_key_env} could not be found in the environment variables."
            )
        return {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}

    def _make_request(self, request: GenerationRequest) -> requests.Response:
        payload = {
            "model": self.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.prompt_text}],
        }
        try:
            response = self.session.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=self._headers(),
                timeout=self.timeout,
            )
            response.raise_for_status()
        except requests.exceptions.RequestException as e:
            raise ProviderError(f"Chat completion request failed. Reason: {e}") from e
        return response

    @staticmethod
    def _convert_response_to_text(response: requests.Response) -> str:
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise ProviderError(f"Unexpected chat completion payload. Reason: {e!r}") from e
        if not isinstance(content, str):
            raise ProviderError("Chat completion content is not a string.")
        return content

    def _generate(self, request: GenerationRequest) -> str:
        response = self._make_request(request)
        return self._convert_response_to_text(response)
