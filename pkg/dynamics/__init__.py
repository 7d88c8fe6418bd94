# این فایل باعث میشه پوشه dynamics به عنوان یک پکیج پایتون شناخته بشه
