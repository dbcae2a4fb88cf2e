# Clark Toolkit Tests
